/* countdown: run a counting loop down from N and print a checksum. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

__attribute__((noinline)) long countdown(long n)
{
    long acc = 0;
    while (n > 0) {
        acc += n % 7;
        n--;
    }
    return acc;
}

int main(int argc, char **argv)
{
    if (argc < 2) {
        fprintf(stderr, "usage: countdown <n>\n");
        return 2;
    }
    if (strcmp(argv[1], "-h") == 0) {
        printf("usage: countdown <n>\n");
        return 0;
    }
    printf("%ld\n", countdown(atol(argv[1])));
    return 0;
}
