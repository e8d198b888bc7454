#include "binreg/cli.hpp"

int main(int argc, char** argv)
{
  return binreg::cli::run(argc, argv);
}
