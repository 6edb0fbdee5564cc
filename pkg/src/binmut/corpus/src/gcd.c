/* gcd: print gcd and lcm for each pair of arguments. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

__attribute__((noinline)) long gcd(long a, long b)
{
    if (a < 0)
        a = -a;
    if (b < 0)
        b = -b;
    while (b != 0) {
        long t = a % b;
        a = b;
        b = t;
    }
    return a;
}

__attribute__((noinline)) long lcm(long a, long b)
{
    long g = gcd(a, b);
    if (g == 0)
        return 0;
    return (a / g) * b;
}

int main(int argc, char **argv)
{
    if (argc >= 2 && strcmp(argv[1], "-h") == 0) {
        printf("usage: gcd <a> <b> [<a> <b>...]\n");
        return 0;
    }
    if (argc < 3 || (argc - 1) % 2 != 0) {
        fprintf(stderr, "usage: gcd <a> <b> [<a> <b>...]\n");
        return 2;
    }
    for (int i = 1; i + 1 < argc; i += 2) {
        long a = atol(argv[i]);
        long b = atol(argv[i + 1]);
        printf("gcd=%ld lcm=%ld\n", gcd(a, b), lcm(a, b));
    }
    return 0;
}
