// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

// Minimal dependency-free PNG IO. The encoder emits 8-bit RGB with stored
// (uncompressed) deflate blocks; the decoder handles stored, fixed and
// dynamic huffman blocks, non-interlaced 8-bit gray/RGB/RGBA input, and
// composites alpha over white.

#include "nerfcast/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "nerfcast/crc32.hpp"

namespace nerfcast {

namespace {

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32be(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

void write_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
    put_u32be(out, static_cast<uint32_t>(data.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    put_u32be(out, crc32(out.data() + start, out.size() - start));
}

// Deflate with stored blocks only, wrapped in a zlib stream.
std::vector<uint8_t> zlib_store(const std::vector<uint8_t>& raw) {
    std::vector<uint8_t> z;
    z.push_back(0x78);
    z.push_back(0x01);
    std::size_t off = 0;
    do {
        const std::size_t n = std::min<std::size_t>(raw.size() - off, 65535);
        const bool final = off + n == raw.size();
        z.push_back(final ? 1 : 0);
        z.push_back(static_cast<uint8_t>(n & 0xff));
        z.push_back(static_cast<uint8_t>(n >> 8));
        z.push_back(static_cast<uint8_t>(~n & 0xff));
        z.push_back(static_cast<uint8_t>((~n >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(off),
                 raw.begin() + static_cast<std::ptrdiff_t>(off + n));
        off += n;
    } while (off < raw.size());
    put_u32be(z, adler32(raw.data(), raw.size()));
    return z;
}

// ---- inflate ----------------------------------------------------------

struct BitReader {
    const uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;
    uint32_t bitbuf = 0;
    int bitcnt = 0;

    int bits(int need) {
        while (bitcnt < need) {
            if (pos >= size) throw IoError("png: truncated deflate stream");
            bitbuf |= static_cast<uint32_t>(data[pos++]) << bitcnt;
            bitcnt += 8;
        }
        const int v = static_cast<int>(bitbuf & ((1u << need) - 1));
        bitbuf >>= need;
        bitcnt -= need;
        return v;
    }

    void align_byte() {
        bitbuf = 0;
        bitcnt = 0;
    }
};

struct Huffman {
    // Canonical huffman decoding tables (counts per length + sorted symbols).
    int count[16] = {0};
    std::vector<int> symbol;

    void build(const uint8_t* lengths, int n) {
        for (int i = 0; i < 16; ++i) count[i] = 0;
        for (int i = 0; i < n; ++i) count[lengths[i]]++;
        count[0] = 0;
        int offs[16];
        offs[1] = 0;
        for (int len = 1; len < 15; ++len) offs[len + 1] = offs[len] + count[len];
        symbol.assign(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i)
            if (lengths[i] != 0) symbol[static_cast<std::size_t>(offs[lengths[i]]++)] = i;
    }

    int decode(BitReader& br) const {
        int code = 0, first = 0, index = 0;
        for (int len = 1; len <= 15; ++len) {
            code |= br.bits(1);
            const int cnt = count[len];
            if (code - first < cnt) return symbol[static_cast<std::size_t>(index + (code - first))];
            index += cnt;
            first = (first + cnt) << 1;
            code <<= 1;
        }
        throw IoError("png: invalid huffman code");
    }
};

std::vector<uint8_t> inflate(const uint8_t* data, std::size_t size, std::size_t expected) {
    static const int len_base[29] = {3,  4,  5,  6,  7,  8,  9,  10, 11,  13,  15,  17,  19, 23, 27,
                                     31, 35, 43, 51, 59, 67, 83, 99, 115, 131, 163, 195, 227, 258};
    static const int len_extra[29] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                                      2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
    static const int dist_base[30] = {1,    2,    3,    4,    5,    7,     9,     13,   17,   25,
                                      33,   49,   65,   97,   129,  193,   257,   385,  513,  769,
                                      1025, 1537, 2049, 3073, 4097, 6145,  8193,  12289, 16385, 24577};
    static const int dist_extra[30] = {0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4,  4,  5,  5,  6,
                                       6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13};

    BitReader br{data, size};
    std::vector<uint8_t> out;
    out.reserve(expected);
    bool final = false;
    while (!final) {
        final = br.bits(1) != 0;
        const int type = br.bits(2);
        if (type == 0) {
            br.align_byte();
            if (br.pos + 4 > br.size) throw IoError("png: truncated stored block");
            const int len = br.data[br.pos] | (br.data[br.pos + 1] << 8);
            const int nlen = br.data[br.pos + 2] | (br.data[br.pos + 3] << 8);
            if ((len ^ 0xffff) != nlen) throw IoError("png: stored block length check failed");
            br.pos += 4;
            if (br.pos + static_cast<std::size_t>(len) > br.size)
                throw IoError("png: truncated stored block data");
            out.insert(out.end(), br.data + br.pos, br.data + br.pos + len);
            br.pos += static_cast<std::size_t>(len);
        } else if (type == 1 || type == 2) {
            Huffman litlen, dist;
            if (type == 1) {
                uint8_t ll[288];
                for (int i = 0; i < 144; ++i) ll[i] = 8;
                for (int i = 144; i < 256; ++i) ll[i] = 9;
                for (int i = 256; i < 280; ++i) ll[i] = 7;
                for (int i = 280; i < 288; ++i) ll[i] = 8;
                uint8_t dd[30];
                for (int i = 0; i < 30; ++i) dd[i] = 5;
                litlen.build(ll, 288);
                dist.build(dd, 30);
            } else {
                const int hlit = br.bits(5) + 257;
                const int hdist = br.bits(5) + 1;
                const int hclen = br.bits(4) + 4;
                static const int order[19] = {16, 17, 18, 0, 8,  7, 9,  6, 10, 5,
                                              11, 4,  12, 3, 13, 2, 14, 1, 15};
                uint8_t clen[19] = {0};
                for (int i = 0; i < hclen; ++i)
                    clen[order[i]] = static_cast<uint8_t>(br.bits(3));
                Huffman cl;
                cl.build(clen, 19);
                uint8_t lengths[288 + 32] = {0};
                int i = 0;
                while (i < hlit + hdist) {
                    const int sym = cl.decode(br);
                    if (sym < 16) {
                        lengths[i++] = static_cast<uint8_t>(sym);
                    } else if (sym == 16) {
                        if (i == 0) throw IoError("png: bad code length repeat");
                        const uint8_t prev = lengths[i - 1];
                        int rep = 3 + br.bits(2);
                        while (rep-- && i < hlit + hdist) lengths[i++] = prev;
                    } else if (sym == 17) {
                        int rep = 3 + br.bits(3);
                        while (rep-- && i < hlit + hdist) lengths[i++] = 0;
                    } else {
                        int rep = 11 + br.bits(7);
                        while (rep-- && i < hlit + hdist) lengths[i++] = 0;
                    }
                }
                litlen.build(lengths, hlit);
                dist.build(lengths + hlit, hdist);
            }
            for (;;) {
                const int sym = litlen.decode(br);
                if (sym < 256) {
                    out.push_back(static_cast<uint8_t>(sym));
                } else if (sym == 256) {
                    break;
                } else {
                    const int li = sym - 257;
                    if (li >= 29) throw IoError("png: bad length symbol");
                    const int length = len_base[li] + br.bits(len_extra[li]);
                    const int ds = dist.decode(br);
                    if (ds >= 30) throw IoError("png: bad distance symbol");
                    const int distance = dist_base[ds] + br.bits(dist_extra[ds]);
                    if (static_cast<std::size_t>(distance) > out.size())
                        throw IoError("png: distance past output start");
                    for (int k = 0; k < length; ++k)
                        out.push_back(out[out.size() - static_cast<std::size_t>(distance)]);
                }
            }
        } else {
            throw IoError("png: reserved block type");
        }
    }
    return out;
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

uint8_t to_byte(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(img.height) * (1 + 3 * static_cast<std::size_t>(img.width)));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        for (int x = 0; x < img.width; ++x) {
            const float* p = img.pixel(x, y);
            raw.push_back(to_byte(p[0]));
            raw.push_back(to_byte(p[1]));
            raw.push_back(to_byte(p[2]));
        }
    }
    std::vector<uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, static_cast<uint32_t>(img.width));
    put_u32be(ihdr, static_cast<uint32_t>(img.height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);   // no interlace
    write_chunk(out, "IHDR", ihdr);
    write_chunk(out, "IDAT", zlib_store(raw));
    write_chunk(out, "IEND", {});
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

void write_png_gray(const std::string& path, const std::vector<float>& values, int w, int h) {
    Image img(w, h);
    for (std::size_t i = 0; i < values.size() && i < img.pixel_count(); ++i) {
        img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = values[i];
    }
    write_png(path, img);
}

Image read_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw IoError("not a png file: " + path);

    int width = 0, height = 0, color_type = -1, bit_depth = 0;
    std::vector<uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        const uint32_t len = get_u32be(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw IoError("png: truncated chunk in " + path);
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const uint8_t* data = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            width = static_cast<int>(get_u32be(data));
            height = static_cast<int>(get_u32be(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw IoError("png: interlaced images unsupported: " + path);
            if (bit_depth != 8) throw IoError("png: only 8-bit images supported: " + path);
            if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
                throw IoError("png: unsupported color type: " + path);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (width <= 0 || height <= 0 || idat.size() < 2) throw IoError("png: missing image data: " + path);

    const int channels = (color_type == 0) ? 1 : (color_type == 2) ? 3 : (color_type == 4) ? 2 : 4;
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    std::vector<uint8_t> raw =
        inflate(idat.data() + 2, idat.size() - 2, (stride + 1) * static_cast<std::size_t>(height));
    if (raw.size() < (stride + 1) * static_cast<std::size_t>(height))
        throw IoError("png: decompressed size mismatch: " + path);

    // Undo per-scanline filters in place.
    std::vector<uint8_t> prev(stride, 0);
    Image img(width, height);
    std::vector<uint8_t> line(stride);
    for (int y = 0; y < height; ++y) {
        const uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
        const int filter = src[0];
        const uint8_t* cur = src + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = (i >= static_cast<std::size_t>(channels)) ? line[i - channels] : 0;
            const int b = prev[i];
            const int c = (i >= static_cast<std::size_t>(channels)) ? prev[i - channels] : 0;
            int v = cur[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw IoError("png: bad filter type: " + path);
            }
            line[i] = static_cast<uint8_t>(v & 0xff);
        }
        for (int x = 0; x < width; ++x) {
            float r, g, bl, alpha = 1.0f;
            const uint8_t* px = line.data() + static_cast<std::size_t>(x) * channels;
            switch (color_type) {
                case 0: r = g = bl = px[0] / 255.0f; break;
                case 2: r = px[0] / 255.0f; g = px[1] / 255.0f; bl = px[2] / 255.0f; break;
                case 4: r = g = bl = px[0] / 255.0f; alpha = px[1] / 255.0f; break;
                default: r = px[0] / 255.0f; g = px[1] / 255.0f; bl = px[2] / 255.0f;
                         alpha = px[3] / 255.0f; break;
            }
            // Composite over white.
            const float bg = 1.0f - alpha;
            img.set_pixel(x, y, {r * alpha + bg, g * alpha + bg, bl * alpha + bg});
        }
        prev = line;
    }
    return img;
}

void write_raw_f32(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    const std::size_t n = img.pixel_count();
    std::vector<float> plane(n);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < n; ++i) plane[i] = img.data[3 * i + static_cast<std::size_t>(c)];
        f.write(reinterpret_cast<const char*>(plane.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
    }
    if (!f) throw IoError("write failed: " + path);
}

Image read_raw_f32(const std::string& path, int width, int height) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    Image img(width, height);
    const std::size_t n = img.pixel_count();
    std::vector<float> plane(n);
    for (int c = 0; c < 3; ++c) {
        f.read(reinterpret_cast<char*>(plane.data()), static_cast<std::streamsize>(n * sizeof(float)));
        if (static_cast<std::size_t>(f.gcount()) != n * sizeof(float))
            throw IoError("raw f32 file too short: " + path);
        for (std::size_t i = 0; i < n; ++i) img.data[3 * i + static_cast<std::size_t>(c)] = plane[i];
    }
    return img;
}

}  // namespace nerfcast
