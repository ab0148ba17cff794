#include "corolla/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace corolla {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32_be(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start)));
    put_u32_be(out, crc);
}

// zlib stream with stored deflate blocks only.
std::vector<std::uint8_t> zlib_stored(const std::vector<std::uint8_t>& raw) {
    std::vector<std::uint8_t> z;
    z.push_back(0x78);  // 32K window, deflate
    z.push_back(0x01);  // no preset dict, fastest-level flag bits
    size_t pos = 0;
    const size_t kMax = 65535;
    do {
        size_t len = std::min(kMax, raw.size() - pos);
        bool final = (pos + len == raw.size());
        z.push_back(final ? 1 : 0);  // BFINAL, BTYPE=00
        z.push_back(static_cast<std::uint8_t>(len & 0xff));
        z.push_back(static_cast<std::uint8_t>(len >> 8));
        z.push_back(static_cast<std::uint8_t>(~len & 0xff));
        z.push_back(static_cast<std::uint8_t>((~len >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + pos, raw.begin() + pos + len);
        pos += len;
    } while (pos < raw.size());
    std::uint32_t adler = static_cast<std::uint32_t>(
        ::adler32(::adler32(0L, nullptr, 0), raw.data(),
                  static_cast<uInt>(raw.size())));
    put_u32_be(z, adler);
    return z;
}

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, size_t size,
                                       size_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    require(inflateInit(&zs) == Z_OK, ErrorCode::io, "inflateInit failed");
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(size);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    require(rc == Z_STREAM_END, ErrorCode::bad_header,
            "PNG: corrupt or truncated zlib stream");
    require(zs.total_out == expected, ErrorCode::payload_mismatch,
            "PNG: decompressed size mismatch");
    return out;
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

const std::uint8_t kSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

}  // namespace

std::vector<std::uint8_t> encode_png_rgb8(const ImageU8& img) {
    std::vector<std::uint8_t> out(kSig, kSig + 8);

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(img.w));
    put_u32_be(ihdr, static_cast<std::uint32_t>(img.h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type RGB
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // no interlace
    append_chunk(out, "IHDR", ihdr);

    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<size_t>(img.h) * (1 + 3 * img.w));
    for (int y = 0; y < img.h; ++y) {
        raw.push_back(0);  // filter: None
        const std::uint8_t* row = img.px.data() + static_cast<size_t>(y) * img.w * 3;
        raw.insert(raw.end(), row, row + static_cast<size_t>(img.w) * 3);
    }
    append_chunk(out, "IDAT", zlib_stored(raw));
    append_chunk(out, "IEND", {});
    return out;
}

void write_png_rgb8(const ImageU8& img, const std::string& path) {
    auto bytes = encode_png_rgb8(img);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    require(f.good(), ErrorCode::io, "write failed: " + path);
}

ImageRGB decode_png(const std::vector<std::uint8_t>& bytes) {
    require(bytes.size() > 8 && std::memcmp(bytes.data(), kSig, 8) == 0,
            ErrorCode::bad_magic, "not a PNG file");

    size_t pos = 8;
    int w = 0, h = 0, depth = 0, color = 0;
    std::vector<std::uint8_t> idat;
    bool seen_ihdr = false, seen_iend = false;
    while (pos + 8 <= bytes.size() && !seen_iend) {
        std::uint32_t len = get_u32_be(bytes.data() + pos);
        require(pos + 12 + len <= bytes.size(), ErrorCode::bad_header,
                "PNG: truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* payload = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            require(len == 13, ErrorCode::bad_header, "PNG: bad IHDR");
            w = static_cast<int>(get_u32_be(payload));
            h = static_cast<int>(get_u32_be(payload + 4));
            depth = payload[8];
            color = payload[9];
            require(payload[12] == 0, ErrorCode::unsupported,
                    "PNG: interlaced images unsupported");
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    require(seen_ihdr && w > 0 && h > 0, ErrorCode::bad_header,
            "PNG: missing IHDR");
    require(depth == 8, ErrorCode::unsupported, "PNG: only 8-bit supported");
    int nch;
    switch (color) {
        case 0: nch = 1; break;
        case 2: nch = 3; break;
        case 6: nch = 4; break;
        default:
            fail(ErrorCode::unsupported, "PNG: unsupported color type");
    }

    size_t stride = static_cast<size_t>(w) * nch;
    auto raw = zlib_inflate(idat.data(), idat.size(),
                            static_cast<size_t>(h) * (stride + 1));

    std::vector<std::uint8_t> pix(static_cast<size_t>(h) * stride);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = raw.data() + static_cast<size_t>(y) * (stride + 1);
        std::uint8_t filter = src[0];
        const std::uint8_t* line = src + 1;
        std::uint8_t* cur = pix.data() + static_cast<size_t>(y) * stride;
        const std::uint8_t* up =
            y > 0 ? pix.data() + static_cast<size_t>(y - 1) * stride : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<size_t>(nch) ? cur[i - nch] : 0;
            int b = up ? up[i] : 0;
            int c = (up && i >= static_cast<size_t>(nch)) ? up[i - nch] : 0;
            int x = line[i];
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += paeth(a, b, c); break;
                default:
                    fail(ErrorCode::bad_header, "PNG: bad filter type");
            }
            cur[i] = static_cast<std::uint8_t>(x & 0xff);
        }
    }

    ImageRGB img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* p = pix.data() + (static_cast<size_t>(y) * w + x) * nch;
            float r, g, b;
            if (nch == 1) {
                r = g = b = static_cast<float>(p[0] / 255.0);
            } else {
                r = static_cast<float>(p[0] / 255.0);
                g = static_cast<float>(p[1] / 255.0);
                b = static_cast<float>(p[2] / 255.0);
            }
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    }
    return img;
}

ImageRGB read_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorCode::missing_file, "cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

}  // namespace corolla
