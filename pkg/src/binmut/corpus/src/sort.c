/* sort: read integers from stdin, print them sorted plus summary stats. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define MAX_ITEMS 4096

static long items[MAX_ITEMS];

__attribute__((noinline)) void insertion_sort(long *a, int n)
{
    for (int i = 1; i < n; i++) {
        long key = a[i];
        int j = i - 1;
        while (j >= 0 && a[j] > key) {
            a[j + 1] = a[j];
            j--;
        }
        a[j + 1] = key;
    }
}

__attribute__((noinline)) long median_x2(const long *a, int n)
{
    if (n % 2 == 1)
        return 2 * a[n / 2];
    return a[n / 2 - 1] + a[n / 2];
}

int main(int argc, char **argv)
{
    if (argc >= 2 && strcmp(argv[1], "-h") == 0) {
        printf("usage: sort < numbers\n");
        return 0;
    }
    int n = 0;
    long v;
    while (n < MAX_ITEMS && scanf("%ld", &v) == 1)
        items[n++] = v;
    if (n == 0) {
        printf("empty\n");
        return 1;
    }
    insertion_sort(items, n);
    long sum = 0;
    for (int i = 0; i < n; i++) {
        printf("%ld%c", items[i], i + 1 == n ? '\n' : ' ');
        sum += items[i];
    }
    printf("n=%d min=%ld max=%ld sum=%ld median_x2=%ld\n", n, items[0], items[n - 1], sum,
           median_x2(items, n));
    return 0;
}
