#include "unsafety/frontend.hpp"

#include <array>
#include <string_view>

namespace unsafety::frontend {

namespace {

constexpr std::array<std::string_view, 16> kKeywords = {
    "package", "use", "type", "global", "mut", "unsafe", "interface", "impl",
    "for", "extern", "fn", "self", "dyn", "fnptr", "let", "indirect"};

constexpr std::array<std::string_view, 5> kPrimitives = {
    "@deref_ptr", "@asm", "@union_field", "@read_global", "@write_global"};

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_letter(c) || is_digit(c) || c == '_'; }

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view word) {
    for (auto w : set) {
        if (w == word) {
            return true;
        }
    }
    return false;
}

class Lexer {
public:
    Lexer(std::string_view src, const std::string& file) : src_(src), file_(file) {}

    LexResult run() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\n') {
                advance();
            } else if (c == ' ' || c == '\t' || c == '\r') {
                advance();
            } else if (c == '/' && peek(1) == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    advance();
                }
            } else if (is_letter(c)) {
                lex_word();
            } else if (c == '@') {
                lex_primitive();
            } else if (c == '"') {
                lex_string();
            } else if (c == ':' && peek(1) == ':') {
                emit(TokenKind::Punctuation, 2);
            } else if (std::string_view(";{}()<>,:.").find(c) != std::string_view::npos) {
                emit(TokenKind::Punctuation, 1);
            } else {
                error(line_, column_, std::string("unexpected character '") + printable(c) + "'");
                advance();
            }
        }
        return std::move(result_);
    }

private:
    char peek(std::size_t ahead) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void emit(TokenKind kind, std::size_t len) {
        Token tok{kind, std::string(src_.substr(pos_, len)), line_, column_};
        for (std::size_t i = 0; i < len; ++i) {
            advance();
        }
        result_.tokens.push_back(std::move(tok));
    }

    void lex_word() {
        std::size_t len = 1;
        while (is_ident_char(peek(len))) {
            ++len;
        }
        std::string_view word = src_.substr(pos_, len);
        emit(contains(kKeywords, word) ? TokenKind::Keyword : TokenKind::Identifier, len);
    }

    void lex_primitive() {
        std::size_t len = 1;
        while (is_ident_char(peek(len))) {
            ++len;
        }
        std::string_view word = src_.substr(pos_, len);
        if (!contains(kPrimitives, word)) {
            error(line_, column_, "unknown primitive '" + std::string(word) + "'");
            for (std::size_t i = 0; i < len; ++i) {
                advance();
            }
            return;
        }
        emit(TokenKind::Keyword, len);
    }

    void lex_string() {
        std::size_t len = 1;
        while (pos_ + len < src_.size() && src_[pos_ + len] != '"' && src_[pos_ + len] != '\n') {
            ++len;
        }
        if (pos_ + len >= src_.size() || src_[pos_ + len] != '"') {
            error(line_, column_, "unterminated string");
            for (std::size_t i = 0; i < len; ++i) {
                advance();
            }
            return;
        }
        emit(TokenKind::AbiString, len + 1);
    }

    static std::string printable(char c) {
        auto u = static_cast<unsigned char>(c);
        if (u >= 0x20 && u < 0x7f) {
            return std::string(1, c);
        }
        static constexpr char kHex[] = "0123456789abcdef";
        return std::string("\\x") + kHex[u >> 4] + kHex[u & 0xf];
    }

    void error(int line, int column, std::string message) {
        result_.diagnostics.push_back(
            Diagnostic{Severity::Error, "E-LEX", std::move(message), SourceLoc{file_, line, column}});
    }

    std::string_view src_;
    const std::string& file_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
    LexResult result_;
};

} // namespace

LexResult tokenize(std::string_view source, const std::string& file) {
    return Lexer(source, file).run();
}

} // namespace unsafety::frontend
