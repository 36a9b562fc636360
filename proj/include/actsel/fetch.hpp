#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "actsel/compress.hpp"

namespace actsel {

// Throws InputError on transport failure or a non-2xx status.
Bytes http_get(const std::string& url, long timeout_seconds = 60);

struct FetchOptions {
  // Base URLs tried in order; "<base><stem>.gz" per file.
  std::vector<std::string> mirrors{
      "https://ossci-datasets.s3.amazonaws.com/mnist/",
      "https://storage.googleapis.com/cvdf-datasets/mnist/",
  };
  // Fallback: a PyPI source archive that bundles the four gz files.
  std::string archive_url =
      "https://files.pythonhosted.org/packages/04/5a/2adc258c5f510e1a2d6381b4d83548a5e8fca25b739cb5fffe80e8da080e/"
      "bob.db.mnist-2.1.1.zip";
  std::string archive_sha256 = "33a393a1d02c66ffe363102ca2dbe48ee84b6865312c5e6d0e0102e20c6715ae";
  std::function<Bytes(const std::string&)> get = [](const std::string& url) { return http_get(url); };
  std::function<void(const std::string&)> log;
};

// Downloads the four MNIST gz files into dir, skipping files that already
// verify. Every file is checked against its recorded checksum before it is
// written. Throws InputError when a file cannot be obtained.
void fetch_mnist(const std::filesystem::path& dir, const FetchOptions& options = {});

}  // namespace actsel
