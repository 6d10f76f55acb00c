#include "cli.hpp"

namespace sslfs::cli {

int run(const std::vector<std::string>&) { return 2; }

}  // namespace sslfs::cli
