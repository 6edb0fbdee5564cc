/* toolbox: several small text and number utilities behind one binary.
 *
 *   toolbox b64enc|b64dec|rot13|rle|unrle|wc|roman|dow|matmul|bigfact|collatz|hist
 */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define BUF_MAX 65536

static unsigned char inbuf[BUF_MAX];
static size_t inlen;

static void read_stdin(void)
{
    inlen = fread(inbuf, 1, sizeof inbuf, stdin);
}

static const char B64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

__attribute__((noinline)) int b64_value(int c)
{
    if (c >= 'A' && c <= 'Z')
        return c - 'A';
    if (c >= 'a' && c <= 'z')
        return c - 'a' + 26;
    if (c >= '0' && c <= '9')
        return c - '0' + 52;
    if (c == '+')
        return 62;
    if (c == '/')
        return 63;
    return -1;
}

__attribute__((noinline)) void b64enc(void)
{
    size_t i;
    for (i = 0; i + 2 < inlen; i += 3) {
        unsigned v = (inbuf[i] << 16) | (inbuf[i + 1] << 8) | inbuf[i + 2];
        putchar(B64[(v >> 18) & 63]);
        putchar(B64[(v >> 12) & 63]);
        putchar(B64[(v >> 6) & 63]);
        putchar(B64[v & 63]);
    }
    if (inlen - i == 1) {
        unsigned v = inbuf[i] << 16;
        printf("%c%c==", B64[(v >> 18) & 63], B64[(v >> 12) & 63]);
    } else if (inlen - i == 2) {
        unsigned v = (inbuf[i] << 16) | (inbuf[i + 1] << 8);
        printf("%c%c%c=", B64[(v >> 18) & 63], B64[(v >> 12) & 63], B64[(v >> 6) & 63]);
    }
    putchar('\n');
}

__attribute__((noinline)) int b64dec(void)
{
    unsigned acc = 0;
    int bits = 0;
    for (size_t i = 0; i < inlen; i++) {
        int c = inbuf[i];
        if (c == '=' || c == '\n' || c == '\r' || c == ' ')
            continue;
        int v = b64_value(c);
        if (v < 0) {
            printf("error: bad base64 character\n");
            return 1;
        }
        acc = (acc << 6) | (unsigned)v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            putchar((acc >> bits) & 0xFF);
        }
    }
    return 0;
}

__attribute__((noinline)) void rot13(void)
{
    for (size_t i = 0; i < inlen; i++) {
        int c = inbuf[i];
        if (c >= 'a' && c <= 'z')
            c = 'a' + (c - 'a' + 13) % 26;
        else if (c >= 'A' && c <= 'Z')
            c = 'A' + (c - 'A' + 13) % 26;
        putchar(c);
    }
}

__attribute__((noinline)) void rle(void)
{
    size_t i = 0;
    while (i < inlen) {
        size_t j = i;
        while (j < inlen && inbuf[j] == inbuf[i] && j - i < 9)
            j++;
        printf("%zu%c", j - i, inbuf[i]);
        i = j;
    }
    putchar('\n');
}

__attribute__((noinline)) int unrle(void)
{
    size_t i = 0;
    while (i + 1 < inlen) {
        int n = inbuf[i] - '0';
        if (n < 1 || n > 9) {
            if (inbuf[i] == '\n')
                break;
            printf("error: bad run length\n");
            return 1;
        }
        for (int k = 0; k < n; k++)
            putchar(inbuf[i + 1]);
        i += 2;
    }
    return 0;
}

__attribute__((noinline)) void wc(void)
{
    long lines = 0, words = 0, chars = 0;
    int in_word = 0;
    for (size_t i = 0; i < inlen; i++) {
        int c = inbuf[i];
        chars++;
        if (c == '\n')
            lines++;
        if (c == ' ' || c == '\n' || c == '\t') {
            in_word = 0;
        } else if (!in_word) {
            in_word = 1;
            words++;
        }
    }
    printf("%ld %ld %ld\n", lines, words, chars);
}

__attribute__((noinline)) void roman(long n)
{
    static const long vals[] = {1000, 900, 500, 400, 100, 90, 50, 40, 10, 9, 5, 4, 1};
    static const char *syms[] = {"M", "CM", "D", "CD", "C", "XC", "L", "XL", "X", "IX", "V", "IV", "I"};
    if (n <= 0 || n >= 4000) {
        printf("error: out of range\n");
        return;
    }
    for (int i = 0; i < 13; i++) {
        while (n >= vals[i]) {
            fputs(syms[i], stdout);
            n -= vals[i];
        }
    }
    putchar('\n');
}

__attribute__((noinline)) int day_of_week(int y, int m, int d)
{
    static const int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
    if (m < 3)
        y -= 1;
    return (y + y / 4 - y / 100 + y / 400 + t[m - 1] + d) % 7;
}

__attribute__((noinline)) void matmul(int n)
{
    static long a[16][16], b[16][16], c[16][16];
    if (n < 1 || n > 16) {
        printf("error: bad size\n");
        return;
    }
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) {
            a[i][j] = (i * 3 + j * 5) % 11 - 5;
            b[i][j] = (i * 7 ^ j * 2) % 13 - 6;
        }
    long trace = 0, total = 0;
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) {
            long s = 0;
            for (int k = 0; k < n; k++)
                s += a[i][k] * b[k][j];
            c[i][j] = s;
            total += s;
            if (i == j)
                trace += s;
        }
    printf("trace=%ld total=%ld c00=%ld\n", trace, total, c[0][0]);
}

__attribute__((noinline)) void bigfact(int n)
{
    static unsigned digits[4096];
    int len = 1;
    digits[0] = 1;
    for (int k = 2; k <= n; k++) {
        unsigned carry = 0;
        for (int i = 0; i < len; i++) {
            unsigned v = digits[i] * (unsigned)k + carry;
            digits[i] = v % 10;
            carry = v / 10;
        }
        while (carry && len < 4096) {
            digits[len++] = carry % 10;
            carry /= 10;
        }
    }
    unsigned dsum = 0;
    for (int i = len - 1; i >= 0; i--) {
        putchar('0' + digits[i]);
        dsum += digits[i];
    }
    printf("\ndigits=%d digitsum=%u\n", len, dsum);
}

__attribute__((noinline)) long collatz_steps(long n)
{
    long steps = 0;
    while (n != 1) {
        if (n & 1)
            n = 3 * n + 1;
        else
            n >>= 1;
        steps++;
    }
    return steps;
}

__attribute__((noinline)) void collatz(long limit)
{
    long best = 1, best_steps = 0;
    for (long i = 1; i <= limit; i++) {
        long s = collatz_steps(i);
        if (s > best_steps) {
            best_steps = s;
            best = i;
        }
    }
    printf("best=%ld steps=%ld\n", best, best_steps);
}

__attribute__((noinline)) void hist(void)
{
    long counts[26] = {0};
    long letters = 0;
    for (size_t i = 0; i < inlen; i++) {
        int c = inbuf[i] | 0x20;
        if (c >= 'a' && c <= 'z') {
            counts[c - 'a']++;
            letters++;
        }
    }
    int top = 0;
    for (int i = 1; i < 26; i++)
        if (counts[i] > counts[top])
            top = i;
    printf("letters=%ld top=%c count=%ld\n", letters, 'a' + top, counts[top]);
}

static void usage(FILE *out)
{
    fprintf(out, "usage: toolbox <command> [args]\n");
    fprintf(out, "commands: b64enc b64dec rot13 rle unrle wc hist roman <n> dow <y> <m> <d>\n");
    fprintf(out, "          matmul <n> bigfact <n> collatz <limit>\n");
}

int main(int argc, char **argv)
{
    if (argc < 2) {
        usage(stderr);
        return 2;
    }
    const char *cmd = argv[1];
    if (strcmp(cmd, "-h") == 0) {
        usage(stdout);
        return 0;
    }
    if (strcmp(cmd, "b64enc") == 0) {
        read_stdin();
        b64enc();
    } else if (strcmp(cmd, "b64dec") == 0) {
        read_stdin();
        return b64dec();
    } else if (strcmp(cmd, "rot13") == 0) {
        read_stdin();
        rot13();
    } else if (strcmp(cmd, "rle") == 0) {
        read_stdin();
        rle();
    } else if (strcmp(cmd, "unrle") == 0) {
        read_stdin();
        return unrle();
    } else if (strcmp(cmd, "wc") == 0) {
        read_stdin();
        wc();
    } else if (strcmp(cmd, "hist") == 0) {
        read_stdin();
        hist();
    } else if (strcmp(cmd, "roman") == 0 && argc == 3) {
        roman(atol(argv[2]));
    } else if (strcmp(cmd, "dow") == 0 && argc == 5) {
        static const char *names[] = {"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
        printf("%s\n", names[day_of_week(atoi(argv[2]), atoi(argv[3]), atoi(argv[4]))]);
    } else if (strcmp(cmd, "matmul") == 0 && argc == 3) {
        matmul(atoi(argv[2]));
    } else if (strcmp(cmd, "bigfact") == 0 && argc == 3) {
        bigfact(atoi(argv[2]));
    } else if (strcmp(cmd, "collatz") == 0 && argc == 3) {
        collatz(atol(argv[2]));
    } else {
        usage(stderr);
        return 2;
    }
    return 0;
}
