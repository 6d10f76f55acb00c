#ifndef SSLFS_CLI_HPP
#define SSLFS_CLI_HPP

#include <string>
#include <vector>

namespace sslfs::cli {

// Entry point shared by main() and the tests. Returns the process exit
// code: 0 success, 1 verification failure, 2 usage/config error, 3 I/O.
int run(const std::vector<std::string>& args);

}  // namespace sslfs::cli

#endif
