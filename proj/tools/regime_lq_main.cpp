#include "regime_lq/cli.hpp"

int main(int argc, char** argv) {
  regime_lq::cli::RunConfig cfg;
  if (auto code = regime_lq::cli::parse_args(argc, argv, cfg)) return *code;
  return regime_lq::cli::run(cfg);
}
