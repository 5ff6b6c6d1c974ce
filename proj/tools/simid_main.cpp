#include <iostream>
#include <string>
#include <vector>

#include "simid/job.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  simid::JobSpec spec;
  try {
    spec = simid::parse_job(args);
  } catch (const simid::HelpRequested& h) {
    std::cout << h.text;
    return simid::kExitOk;
  } catch (const simid::JobParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return simid::kExitParse;
  }
  return simid::run_job(spec, std::cout, std::cerr);
}
