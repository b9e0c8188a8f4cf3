#include <mpc/cli.hpp>

int main(int argc, char** argv) { return mpc::cli::run(argc, argv); }
