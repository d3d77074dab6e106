#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace soe {

class ServiceHost;

struct CliStreams {
  std::ostream& out;
  std::ostream& err;
  /// Called by `serve` once the socket is bound and before it blocks; lets
  /// tests drive and stop the server.
  std::function<void(ServiceHost&, int port)> on_listening;
};

/// Runs one command line (args[0] is the program name). Returns the exit
/// status: 0 success, 1 data or runtime error, 2 usage error.
int run_cli(const std::vector<std::string>& args, CliStreams io);

}  // namespace soe
