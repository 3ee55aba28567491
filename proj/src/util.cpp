/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/util.cpp
 *
 * Copyright 2026 The facefit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "facefit/util.hpp"

#include "facefit/common.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace facefit {

void parallel_for(std::size_t n, int degree, const std::function<void(std::size_t)>& fn)
{
    if (n == 0)
        return;
    const std::size_t workers = std::min<std::size_t>(std::max(degree, 1), n);
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        pool.emplace_back([&]() {
            for (;;)
            {
                const std::size_t i = next.fetch_add(1);
                if (i >= n)
                    return;
                fn(i);
            }
        });
    }
    for (auto& t : pool)
        t.join();
}

int effective_parallelism(int requested, const char* env_var)
{
    int degree = std::max(requested, 1);
    if (env_var != nullptr)
    {
        if (const char* value = std::getenv(env_var))
        {
            char* end = nullptr;
            const long parsed = std::strtol(value, &end, 10);
            if (end != value && *end == '\0' && parsed > 0)
                degree = static_cast<int>(parsed);
        }
    }
    return degree;
}

namespace {
constexpr char kBase64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int base64_value(char c)
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
} // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t size)
{
    std::string out;
    out.reserve((size + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= size; i += 3)
    {
        const std::uint32_t triple = (std::uint32_t(data[i]) << 16) | (std::uint32_t(data[i + 1]) << 8) |
                                     std::uint32_t(data[i + 2]);
        out.push_back(kBase64Alphabet[(triple >> 18) & 0x3F]);
        out.push_back(kBase64Alphabet[(triple >> 12) & 0x3F]);
        out.push_back(kBase64Alphabet[(triple >> 6) & 0x3F]);
        out.push_back(kBase64Alphabet[triple & 0x3F]);
    }
    const std::size_t rem = size - i;
    if (rem == 1)
    {
        const std::uint32_t v = std::uint32_t(data[i]) << 16;
        out.push_back(kBase64Alphabet[(v >> 18) & 0x3F]);
        out.push_back(kBase64Alphabet[(v >> 12) & 0x3F]);
        out.push_back('=');
        out.push_back('=');
    } else if (rem == 2)
    {
        const std::uint32_t v = (std::uint32_t(data[i]) << 16) | (std::uint32_t(data[i + 1]) << 8);
        out.push_back(kBase64Alphabet[(v >> 18) & 0x3F]);
        out.push_back(kBase64Alphabet[(v >> 12) & 0x3F]);
        out.push_back(kBase64Alphabet[(v >> 6) & 0x3F]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text)
{
    if (text.size() % 4 != 0)
        throw ValidationError("base64: length is not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4)
    {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k)
        {
            const char c = text[i + k];
            if (c == '=')
            {
                if (i + 4 != text.size() || k < 2)
                    throw ValidationError("base64: misplaced padding");
                vals[k] = 0;
                ++pad;
            } else
            {
                if (pad > 0)
                    throw ValidationError("base64: data after padding");
                vals[k] = base64_value(c);
                if (vals[k] < 0)
                    throw ValidationError(std::string("base64: invalid character '") + c + "'");
            }
        }
        const std::uint32_t triple = (std::uint32_t(vals[0]) << 18) | (std::uint32_t(vals[1]) << 12) |
                                     (std::uint32_t(vals[2]) << 6) | std::uint32_t(vals[3]);
        out.push_back(std::uint8_t((triple >> 16) & 0xFF));
        if (pad < 2)
            out.push_back(std::uint8_t((triple >> 8) & 0xFF));
        if (pad < 1)
            out.push_back(std::uint8_t(triple & 0xFF));
    }
    return out;
}

void atomic_write_file(const std::string& path, const std::string& content)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw Error("cannot open for writing: " + tmp);
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os)
            throw Error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} /* namespace facefit */
