#include "spaceport/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace spaceport
{
    namespace
    {
        class Sha256
        {
        public:
            Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free)
            {
                if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
                    throw std::runtime_error("sha256: digest initialisation failed");
            }

            void update(const char *data, std::size_t size)
            {
                if (EVP_DigestUpdate(ctx_.get(), data, size) != 1)
                    throw std::runtime_error("sha256: digest update failed");
            }

            std::string hex()
            {
                std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
                unsigned int len = 0;
                if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1)
                    throw std::runtime_error("sha256: digest finalisation failed");
                std::ostringstream out;
                out << std::hex << std::setfill('0');
                for (unsigned int k = 0; k < len; ++k)
                    out << std::setw(2) << static_cast<int>(md[k]);
                return out.str();
            }

        private:
            std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
        };
    } // namespace

    std::string sha256_bytes(const std::string &bytes)
    {
        Sha256 h;
        h.update(bytes.data(), bytes.size());
        return h.hex();
    }

    std::string sha256_file(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot open '" + path + "' for digesting");
        Sha256 h;
        std::array<char, 1 << 16> buf{};
        while (in)
        {
            in.read(buf.data(), buf.size());
            h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
        }
        return h.hex();
    }

    std::string utc_timestamp()
    {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        std::ostringstream out;
        out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        return out.str();
    }

    nlohmann::json RunManifest::to_json() const
    {
        return {{"command", command},   {"argv", argv},
                {"config", config},     {"seed", seed},
                {"version", version},   {"input_digests", input_digests},
                {"started", started},   {"finished", finished}};
    }

    void write_manifest(const std::string &path, const RunManifest &manifest)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write manifest '" + path + "'");
        out << manifest.to_json().dump(2) << '\n';
    }

} // namespace spaceport
