#include "factline/nn/optim.hpp"

#include <cmath>

namespace factline::nn {

Param& ParamStore::create(const std::string& name, int rows, int cols) {
    if (by_name_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
    auto p = std::make_unique<Param>();
    p->name = name;
    p->value = Mat::Zero(rows, cols);
    p->grad = Mat::Zero(rows, cols);
    p->m = Mat::Zero(rows, cols);
    p->v = Mat::Zero(rows, cols);
    Param* raw = p.get();
    storage_.push_back(std::move(p));
    order_.push_back(raw);
    by_name_[name] = raw;
    return *raw;
}

Param& ParamStore::at(const std::string& name) {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ContractError("unknown parameter '" + name + "'");
    return *it->second;
}

const Param& ParamStore::at(const std::string& name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ContractError("unknown parameter '" + name + "'");
    return *it->second;
}

bool ParamStore::has(const std::string& name) const { return by_name_.count(name) > 0; }

void ParamStore::zero_grads() {
    for (Param* p : order_) p->grad.setZero();
}

long long ParamStore::scalar_count() const {
    long long n = 0;
    for (const Param* p : order_) n += static_cast<long long>(p->value.size());
    return n;
}

void init_normal(Param& p, Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
            p.value(i, j) = rng.normal() * stddev;
        }
    }
}

void init_zeros(Param& p) { p.value.setZero(); }

void AdamW::step(ParamStore& params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Param* p : params.all()) {
        p->m = cfg_.beta1 * p->m + (1.0 - cfg_.beta1) * p->grad;
        p->v = cfg_.beta2 * p->v.array().matrix() +
               (1.0 - cfg_.beta2) * p->grad.array().square().matrix();
        const auto m_hat = p->m.array() / bc1;
        const auto v_hat = p->v.array() / bc2;
        p->value.array() -=
            lr * (m_hat / (v_hat.sqrt() + cfg_.eps) + cfg_.weight_decay * p->value.array());
        p->grad.setZero();
    }
}

}  // namespace factline::nn
