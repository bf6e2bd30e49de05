#include "hjadm/harness.hpp"

int main(int argc, char** argv) { return hjadm::cli::main(argc, argv); }
