#include "fresco/cli.hpp"
namespace fresco { int cli_main(int, char**) { return 0; } }
