#include <cstdio>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::printf("dial cli placeholder\n");
  return 0;
}
