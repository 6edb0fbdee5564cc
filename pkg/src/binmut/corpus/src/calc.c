/* calc: a small RPN calculator over 64-bit integers reading tokens from stdin. */
#include <ctype.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define STACK_MAX 256

static long stack[STACK_MAX];
static int depth;

static void fail(const char *msg)
{
    printf("error: %s\n", msg);
    exit(1);
}

__attribute__((noinline)) void push(long v)
{
    if (depth >= STACK_MAX)
        fail("stack overflow");
    stack[depth++] = v;
}

__attribute__((noinline)) long pop(void)
{
    if (depth <= 0)
        fail("stack underflow");
    return stack[--depth];
}

__attribute__((noinline)) long ipow(long base, long exp)
{
    long result = 1;
    if (exp < 0)
        return 0;
    while (exp > 0) {
        if (exp & 1)
            result *= base;
        base *= base;
        exp >>= 1;
    }
    return result;
}

__attribute__((noinline)) long isqrt(long v)
{
    if (v < 0)
        fail("negative sqrt");
    long lo = 0, hi = v < 3037000499L ? v : 3037000499L;
    while (lo < hi) {
        long mid = lo + (hi - lo + 1) / 2;
        if (mid * mid <= v)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

__attribute__((noinline)) long fact(long n)
{
    long r = 1;
    for (long i = 2; i <= n; i++)
        r *= i;
    return r;
}

__attribute__((noinline)) void apply(const char *tok)
{
    long a, b;
    if (strlen(tok) == 1) {
        switch (tok[0]) {
        case '+': b = pop(); a = pop(); push(a + b); return;
        case '-': b = pop(); a = pop(); push(a - b); return;
        case '*': b = pop(); a = pop(); push(a * b); return;
        case '/':
            b = pop(); a = pop();
            if (b == 0)
                fail("division by zero");
            push(a / b);
            return;
        case '%':
            b = pop(); a = pop();
            if (b == 0)
                fail("division by zero");
            push(a % b);
            return;
        case '&': b = pop(); a = pop(); push(a & b); return;
        case '|': b = pop(); a = pop(); push(a | b); return;
        case '^': b = pop(); a = pop(); push(a ^ b); return;
        case '~': push(~pop()); return;
        case '<': b = pop(); a = pop(); push(a << (b & 63)); return;
        case '>': b = pop(); a = pop(); push(a >> (b & 63)); return;
        case 'n': push(-pop()); return;
        case 'd': a = pop(); push(a); push(a); return;
        case 's': b = pop(); a = pop(); push(b); push(a); return;
        case 'p': a = pop(); printf("%ld\n", a); push(a); return;
        case '!': push(fact(pop())); return;
        case 'q': push(isqrt(pop())); return;
        case 'm': b = pop(); a = pop(); push(a > b ? a : b); return;
        default:
            break;
        }
    }
    if (strcmp(tok, "pow") == 0) {
        b = pop();
        a = pop();
        push(ipow(a, b));
        return;
    }
    if (strcmp(tok, "sum") == 0) {
        long s = 0;
        while (depth > 0)
            s += pop();
        push(s);
        return;
    }
    char *end;
    long v = strtol(tok, &end, 10);
    if (*end != '\0' || end == tok)
        fail("bad token");
    push(v);
}

int main(int argc, char **argv)
{
    if (argc >= 2 && strcmp(argv[1], "-h") == 0) {
        printf("usage: calc < program\n");
        printf("ops: + - * / %% & | ^ ~ < > n d s p ! q m pow sum\n");
        return 0;
    }
    char tok[64];
    while (scanf("%63s", tok) == 1)
        apply(tok);
    for (int i = 0; i < depth; i++)
        printf("%s%ld", i ? " " : "", stack[i]);
    printf("\n");
    return 0;
}
