#pragma once

#include "unsafety/frontend.hpp"

#include <string>
#include <vector>

namespace testsupport {

std::string fixture_path(const std::string& relative);

/// Every .ml file under the fixture directory, sorted by path.
std::vector<unsafety::frontend::SourceFile> fixture_sources(const std::string& relative);

/// Loads a fixture directory; fails loudly (std::runtime_error listing the
/// diagnostics) if it has errors.
unsafety::Corpus load_fixture(const std::string& relative);

/// Loads in-memory sources, throwing like load_fixture on errors.
unsafety::Corpus load_sources(const std::vector<unsafety::frontend::SourceFile>& files);

/// Single-file convenience.
unsafety::frontend::LoadResult load_text(const std::string& text, const std::string& path = "input.ml");

} // namespace testsupport
