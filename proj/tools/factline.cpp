#include <cstdio>

int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::puts("factline: pipeline CLI (subcommands land with the pipeline module)");
    return 0;
}
