/* abs: print the absolute value of an integer argument. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

__attribute__((noinline)) int abs_value(int x)
{
    int r;
    if (x >= 0) {
        r = x;
    } else {
        r = -x;
    }
    return r;
}

int main(int argc, char **argv)
{
    if (argc < 2) {
        fprintf(stderr, "usage: abs <int>...\n");
        return 2;
    }
    if (strcmp(argv[1], "-h") == 0) {
        printf("usage: abs <int>...\n");
        return 0;
    }
    for (int i = 1; i < argc; i++)
        printf("%d\n", abs_value(atoi(argv[i])));
    return 0;
}
