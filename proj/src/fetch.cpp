#include "actsel/fetch.hpp"

#include <curl/curl.h>

#include <mutex>
#include <optional>

#include "actsel/errors.hpp"
#include "actsel/idx.hpp"

namespace actsel {

namespace {

std::size_t append(char* data, std::size_t size, std::size_t count, void* user) {
  auto* out = static_cast<Bytes*>(user);
  out->insert(out->end(), data, data + size * count);
  return size * count;
}

bool matches(const MnistFileSpec& spec, const Bytes& gz) {
  try {
    return sha256_hex(gunzip(gz)) == spec.sha256;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

Bytes http_get(const std::string& url, long timeout_seconds) {
  static std::once_flag init;
  std::call_once(init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
  CURL* curl = curl_easy_init();
  if (!curl) throw InputError("curl initialisation failed");
  Bytes body;
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, timeout_seconds);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 15L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, append);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(curl);
  long status = 0;
  curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
  curl_easy_cleanup(curl);
  if (rc != CURLE_OK) throw InputError(url + ": " + curl_easy_strerror(rc));
  if (status < 200 || status >= 300) throw InputError(url + ": HTTP " + std::to_string(status));
  return body;
}

void fetch_mnist(const std::filesystem::path& dir, const FetchOptions& options) {
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };
  std::filesystem::create_directories(dir);
  std::optional<Bytes> archive;
  bool archive_failed = false;

  for (const auto& spec : mnist_files()) {
    const auto target = dir / (std::string(spec.stem) + ".gz");
    if (std::filesystem::exists(target) && matches(spec, read_file(target))) {
      log(std::string(spec.stem) + ": already present");
      continue;
    }
    std::optional<Bytes> good;
    for (const auto& base : options.mirrors) {
      const std::string url = base + std::string(spec.stem) + ".gz";
      try {
        Bytes gz = options.get(url);
        if (matches(spec, gz)) {
          good = std::move(gz);
          log(std::string(spec.stem) + ": " + url);
          break;
        }
        log(url + ": checksum mismatch");
      } catch (const std::exception& e) {
        log(e.what());
      }
    }
    if (!good && !archive_failed) {
      if (!archive) {
        try {
          Bytes zip = options.get(options.archive_url);
          if (sha256_hex(zip) != options.archive_sha256) throw InputError(options.archive_url + ": checksum mismatch");
          archive = std::move(zip);
        } catch (const std::exception& e) {
          log(e.what());
          archive_failed = true;
        }
      }
      if (archive) {
        try {
          Bytes gz = zip_extract(*archive, std::string(spec.stem) + ".gz");
          if (matches(spec, gz)) {
            good = std::move(gz);
            log(std::string(spec.stem) + ": " + options.archive_url);
          }
        } catch (const std::exception& e) {
          log(e.what());
        }
      }
    }
    if (!good) throw InputError("could not download " + std::string(spec.stem) + " into " + dir.string());
    write_file(target, *good);
  }
}

}  // namespace actsel
