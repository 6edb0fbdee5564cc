/* crc: CRC-32, Adler-32 and a popcount of stdin. */
#include <stdio.h>
#include <stdint.h>
#include <string.h>

static uint32_t table[256];

__attribute__((noinline)) void crc_init(void)
{
    for (uint32_t i = 0; i < 256; i++) {
        uint32_t c = i;
        for (int k = 0; k < 8; k++) {
            if (c & 1)
                c = 0xEDB88320u ^ (c >> 1);
            else
                c >>= 1;
        }
        table[i] = c;
    }
}

__attribute__((noinline)) uint32_t crc_update(uint32_t crc, const unsigned char *buf, size_t len)
{
    crc = ~crc;
    for (size_t i = 0; i < len; i++)
        crc = table[(crc ^ buf[i]) & 0xFF] ^ (crc >> 8);
    return ~crc;
}

__attribute__((noinline)) unsigned popcount8(unsigned char b)
{
    unsigned n = 0;
    while (b) {
        n += b & 1;
        b >>= 1;
    }
    return n;
}

int main(int argc, char **argv)
{
    if (argc >= 2 && strcmp(argv[1], "-h") == 0) {
        printf("usage: crc < data\n");
        return 0;
    }
    unsigned char buf[4096];
    size_t got;
    uint32_t crc = 0, a = 1, b = 0;
    unsigned long bits = 0, total = 0;
    crc_init();
    while ((got = fread(buf, 1, sizeof buf, stdin)) > 0) {
        crc = crc_update(crc, buf, got);
        for (size_t i = 0; i < got; i++) {
            a = (a + buf[i]) % 65521u;
            b = (b + a) % 65521u;
            bits += popcount8(buf[i]);
        }
        total += got;
    }
    printf("bytes=%lu crc32=%08x adler32=%08x ones=%lu\n", total, crc, (b << 16) | a, bits);
    return 0;
}
