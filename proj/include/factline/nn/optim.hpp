#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "factline/common.hpp"
#include "factline/nn/autograd.hpp"

namespace factline::nn {

// Owns model parameters in creation order (deterministic optimizer sweeps).
class ParamStore {
  public:
    Param& create(const std::string& name, int rows, int cols);
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool has(const std::string& name) const;
    std::vector<Param*>& all() { return order_; }
    const std::vector<Param*>& all() const { return order_; }
    void zero_grads();
    long long scalar_count() const;

  private:
    std::vector<std::unique_ptr<Param>> storage_;
    std::vector<Param*> order_;
    std::map<std::string, Param*> by_name_;
};

void init_normal(Param& p, Rng& rng, double stddev);
void init_zeros(Param& p);

class AdamW {
  public:
    struct Config {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.01;
    };

    AdamW() : cfg_(Config{}) {}
    explicit AdamW(Config cfg) : cfg_(cfg) {}

    // Applies accumulated gradients and clears them.
    void step(ParamStore& params, double lr);
    long step_count() const { return t_; }

  private:
    Config cfg_;
    long t_ = 0;
};

}  // namespace factline::nn
