// Writes the built-in synthetic table set as table files, one per
// (group, sex). Used to refresh data/synthetic_tables.
#include <filesystem>
#include <iostream>

#include "spiro/error.h"
#include "spiro/synth.h"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_synthetic_tables <output-dir>\n";
    return 2;
  }
  try {
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    spiro::MakeSyntheticTableSet().WriteDirectory(dir);
  } catch (const spiro::Error& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
