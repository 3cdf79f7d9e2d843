#pragma once

#include <iosfwd>

namespace tarml::app {

// The tarml command line: ingest, xrd, train, tune, evaluate, optimize,
// explain, stats and serve. Returns the process exit status; failures print a
// one-line diagnostic to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tarml::app
