// Stdio protocol test double. Usage: enhancer_double [bicubic|short|long|
// model-error|wrong-id|unknown-status|close|truncated-header]

#include <unistd.h>

#include <string>

#include "double_server.hpp"

int main(int argc, char** argv) {
  const auto behaviour = testdouble::parse_behaviour(argc > 1 ? argv[1] : "bicubic");
  testdouble::serve(STDIN_FILENO, STDOUT_FILENO, behaviour);
  return 0;
}
