#include <cstdio>

int main() {
    std::puts("echelon: CLI under construction");
    return 0;
}
