#pragma once
namespace fresco { int cli_main(int argc, char** argv); }
