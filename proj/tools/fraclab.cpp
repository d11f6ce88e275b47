#include <cstdio>

int main() {
  std::puts("fraclab: experiment driver not wired up yet");
  return 2;
}
