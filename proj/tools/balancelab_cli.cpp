#include <cstdio>

int main() {
    std::puts("balancelab: CLI under construction");
    return 0;
}
