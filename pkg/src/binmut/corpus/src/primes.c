/* primes: sieve of Eratosthenes up to N; prints count, sum and largest prime. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

__attribute__((noinline)) long sieve(unsigned char *composite, long n)
{
    long count = 0;
    for (long i = 2; i <= n; i++) {
        if (composite[i])
            continue;
        count++;
        for (long j = i * i; j <= n; j += i)
            composite[j] = 1;
    }
    return count;
}

int main(int argc, char **argv)
{
    if (argc < 2) {
        fprintf(stderr, "usage: primes <n>\n");
        return 2;
    }
    if (strcmp(argv[1], "-h") == 0) {
        printf("usage: primes <n>\n");
        return 0;
    }
    long n = atol(argv[1]);
    if (n < 2) {
        printf("count=0\n");
        return 0;
    }
    unsigned char *composite = calloc((size_t)n + 1, 1);
    if (!composite)
        return 3;
    long count = sieve(composite, n);
    long sum = 0, largest = 0;
    for (long i = 2; i <= n; i++) {
        if (!composite[i]) {
            sum += i;
            largest = i;
        }
    }
    printf("count=%ld sum=%ld largest=%ld\n", count, sum, largest);
    free(composite);
    return 0;
}
