#include <algorithm>
#include <array>
#include <cctype>

#include "webpar/dom.hpp"
#include "webpar/error.hpp"

namespace webpar {

namespace {

constexpr std::array<std::string_view, 16> kVoidElements = {
    "area", "base", "br",   "col",   "embed",  "hr",    "img",   "input",
    "link", "meta", "param", "source", "track", "wbr",  "keygen", "command",
};

// Elements whose content is text, not markup.
constexpr std::array<std::string_view, 4> kRawTextElements = {"script", "style", "textarea", "title"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
  return std::find(set.begin(), set.end(), name) != set.end();
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

bool is_name_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '-' || c == '_' || c == ':' || c == '.';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Case-insensitive search for "</name" starting at `from`.
std::size_t find_end_tag(std::string_view text, std::string_view name, std::size_t from) {
  for (auto pos = text.find("</", from); pos != std::string_view::npos; pos = text.find("</", pos + 2)) {
    const auto start = pos + 2;
    if (start + name.size() > text.size()) return std::string_view::npos;
    bool match = true;
    for (std::size_t k = 0; k < name.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(text[start + k])) != name[k]) {
        match = false;
        break;
      }
    }
    if (match) {
      const auto after = start + name.size();
      if (after == text.size() || !is_name_char(text[after])) return pos;
    }
  }
  return std::string_view::npos;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  DomTree run() {
    while (pos_ < text_.size()) {
      const auto lt = text_.find('<', pos_);
      if (lt == std::string_view::npos) break;
      pos_ = lt;
      if (starts_with("<!--")) {
        skip_past("-->", pos_ + 4);
      } else if (peek(1) == '!' || peek(1) == '?') {
        skip_past(">", pos_ + 2);
      } else if (peek(1) == '/') {
        end_tag();
      } else if (std::isalpha(static_cast<unsigned char>(peek(1)))) {
        start_tag();
      } else {
        ++pos_;  // stray '<' in text
      }
    }
    if (tree_.empty()) throw Error(ErrorKind::empty_document, "empty document: no elements found");
    tree_.set_source_byte_size(text_.size());
    return std::move(tree_);
  }

 private:
  char peek(std::size_t offset) const {
    return pos_ + offset < text_.size() ? text_[pos_ + offset] : '\0';
  }

  bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  void skip_past(std::string_view terminator, std::size_t from) {
    const auto end = text_.find(terminator, from);
    pos_ = end == std::string_view::npos ? text_.size() : end + terminator.size();
  }

  std::string read_name() {
    const auto start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    return lower(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  void end_tag() {
    pos_ += 2;
    const auto name = read_name();
    skip_past(">", pos_);
    if (name.empty()) return;
    for (auto i = open_.size(); i-- > 0;) {
      if (tree_.node(open_[i]).tag == name) {
        const std::size_t floor = open_.front() == 0 ? 1 : 0;  // the root is never closed
        open_.resize(std::max(i, floor));
        return;
      }
    }
  }

  void start_tag() {
    ++pos_;
    auto name = read_name();
    std::uint32_t attributes = 0;
    bool self_closing = false;

    // Attribute loop; running out of input inside a tag drops the tag.
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) return;
      const char c = text_[pos_];
      if (c == '>') {
        ++pos_;
        break;
      }
      if (c == '/') {
        ++pos_;
        if (peek(0) == '>') {
          self_closing = true;
          ++pos_;
          break;
        }
        continue;
      }
      // Attribute name: anything up to whitespace, '=', '>' or '/'.
      const auto name_start = pos_;
      ++pos_;
      while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '=' && text_[pos_] != '>' &&
             text_[pos_] != '/') {
        ++pos_;
      }
      if (pos_ > name_start) ++attributes;
      skip_space();
      if (peek(0) != '=') continue;
      ++pos_;
      skip_space();
      if (pos_ >= text_.size()) return;
      const char q = text_[pos_];
      if (q == '"' || q == '\'') {
        const auto close = text_.find(q, pos_ + 1);
        if (close == std::string_view::npos) {
          pos_ = text_.size();
          return;
        }
        pos_ = close + 1;
      } else {
        while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '>') ++pos_;
      }
    }

    const NodeId id = add_element(std::move(name), attributes);
    const auto& tag = tree_.node(id).tag;
    if (self_closing || contains(kVoidElements, tag)) return;
    if (contains(kRawTextElements, tag)) {
      const auto close = find_end_tag(text_, tag, pos_);
      if (close == std::string_view::npos) {
        pos_ = text_.size();
      } else {
        pos_ = close;
        end_tag();
      }
      return;
    }
    open_.push_back(id);
  }

  NodeId add_element(std::string name, std::uint32_t attributes) {
    if (tree_.empty()) return tree_.add_root(std::move(name), attributes);
    const NodeId parent = open_.empty() ? 0 : open_.back();
    return tree_.add_child(parent, std::move(name), attributes);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  DomTree tree_;
  std::vector<NodeId> open_;
};

}  // namespace

DomTree parse_html(std::string_view text) {
  if (text.empty()) throw Error(ErrorKind::empty_document, "empty document: input is empty");
  return Parser(text).run();
}

}  // namespace webpar
