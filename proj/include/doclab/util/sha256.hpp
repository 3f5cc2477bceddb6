// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_UTIL_SHA256_HPP_
#define DOCLAB_UTIL_SHA256_HPP_

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace doclab {

// Minimal SHA-256 (FIPS 180-4), used for checkpoint and manifest content
// hashes. Streaming interface so large blobs never need a second copy.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset() {
        h_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
              0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        buffer_len_ = 0;
        total_bits_ = 0;
    }

    void update(const void* data, size_t len) {
        const uint8_t* p = static_cast<const uint8_t*>(data);
        total_bits_ += static_cast<uint64_t>(len) * 8;
        while (len > 0) {
            const size_t take = std::min(len, size_t(64) - buffer_len_);
            std::memcpy(buffer_.data() + buffer_len_, p, take);
            buffer_len_ += take;
            p += take;
            len -= take;
            if (buffer_len_ == 64) {
                process_(buffer_.data());
                buffer_len_ = 0;
            }
        }
    }

    void update(const std::string& s) { update(s.data(), s.size()); }

    std::array<uint8_t, 32> digest() {
        Sha256 copy = *this;
        copy.pad_();
        std::array<uint8_t, 32> out{};
        for (int i = 0; i < 8; ++i) {
            out[4 * i + 0] = static_cast<uint8_t>(copy.h_[i] >> 24);
            out[4 * i + 1] = static_cast<uint8_t>(copy.h_[i] >> 16);
            out[4 * i + 2] = static_cast<uint8_t>(copy.h_[i] >> 8);
            out[4 * i + 3] = static_cast<uint8_t>(copy.h_[i]);
        }
        return out;
    }

    std::string hex_digest() {
        static const char* k = "0123456789abcdef";
        const auto d = digest();
        std::string s;
        s.reserve(64);
        for (uint8_t b : d) {
            s.push_back(k[b >> 4]);
            s.push_back(k[b & 0xF]);
        }
        return s;
    }

    static std::string hex_of(const std::string& data) {
        Sha256 h;
        h.update(data);
        return h.hex_digest();
    }

private:
    static uint32_t rotr_(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void process_(const uint8_t* block) {
        static const uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        uint32_t w[64];
        for (int i = 0; i < 16; ++i) {
            w[i] = (uint32_t(block[4 * i]) << 24) | (uint32_t(block[4 * i + 1]) << 16) |
                   (uint32_t(block[4 * i + 2]) << 8) | uint32_t(block[4 * i + 3]);
        }
        for (int i = 16; i < 64; ++i) {
            const uint32_t s0 = rotr_(w[i - 15], 7) ^ rotr_(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const uint32_t s1 = rotr_(w[i - 2], 17) ^ rotr_(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3];
        uint32_t e = h_[4], f = h_[5], g = h_[6], h = h_[7];
        for (int i = 0; i < 64; ++i) {
            const uint32_t S1 = rotr_(e, 6) ^ rotr_(e, 11) ^ rotr_(e, 25);
            const uint32_t ch = (e & f) ^ (~e & g);
            const uint32_t t1 = h + S1 + ch + K[i] + w[i];
            const uint32_t S0 = rotr_(a, 2) ^ rotr_(a, 13) ^ rotr_(a, 22);
            const uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const uint32_t t2 = S0 + maj;
            h = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
        h_[5] += f;
        h_[6] += g;
        h_[7] += h;
    }

    void pad_() {
        const uint64_t bits = total_bits_;
        uint8_t one = 0x80;
        update(&one, 1);
        const uint8_t zero = 0x00;
        while (buffer_len_ != 56) update(&zero, 1);
        uint8_t len_be[8];
        for (int i = 0; i < 8; ++i) len_be[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
        // Bypass the bit counter for the length block itself.
        std::memcpy(buffer_.data() + 56, len_be, 8);
        process_(buffer_.data());
        buffer_len_ = 0;
    }

    std::array<uint32_t, 8> h_{};
    std::array<uint8_t, 64> buffer_{};
    size_t buffer_len_ = 0;
    uint64_t total_bits_ = 0;
};

}  // namespace doclab

#endif  // DOCLAB_UTIL_SHA256_HPP_
