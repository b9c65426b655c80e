#include "metacast/service.hpp"

int main(int argc, char** argv) { return metacast::run_cli(argc, argv); }
