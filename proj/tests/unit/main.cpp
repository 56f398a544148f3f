#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "telezoom/common.hpp"

int main(int argc, char** argv) {
  // Expected warnings (fallbacks, infeasible windows) would drown the report.
  telezoom::set_log_level(telezoom::LogLevel::error);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
