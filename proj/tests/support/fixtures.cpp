#include "fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace testsupport {

namespace fs = std::filesystem;
using namespace unsafety;

std::string fixture_path(const std::string& relative) { return std::string(UNSAFETY_FIXTURES_DIR) + "/" + relative; }

std::vector<frontend::SourceFile> fixture_sources(const std::string& relative) {
    std::vector<fs::path> paths;
    fs::path root(fixture_path(relative));
    if (fs::is_regular_file(root)) {
        paths.push_back(root);
    } else {
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (entry.is_regular_file() && entry.path().extension() == ".ml") {
                paths.push_back(entry.path());
            }
        }
    }
    std::sort(paths.begin(), paths.end());
    std::vector<frontend::SourceFile> files;
    for (const auto& p : paths) {
        std::ifstream in(p);
        std::ostringstream text;
        text << in.rdbuf();
        files.push_back(frontend::SourceFile{p.string(), text.str()});
    }
    return files;
}

Corpus load_sources(const std::vector<frontend::SourceFile>& files) {
    frontend::LoadResult loaded = frontend::load_corpus(files);
    if (!loaded.ok()) {
        std::string message = "corpus has errors:";
        for (const auto& d : loaded.diagnostics) {
            message += "\n  " + format(d);
        }
        throw std::runtime_error(message);
    }
    return std::move(loaded.corpus);
}

Corpus load_fixture(const std::string& relative) { return load_sources(fixture_sources(relative)); }

frontend::LoadResult load_text(const std::string& text, const std::string& path) {
    std::vector<frontend::SourceFile> files{frontend::SourceFile{path, text}};
    return frontend::load_corpus(files);
}

} // namespace testsupport
