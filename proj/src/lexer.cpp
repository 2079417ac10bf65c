#include "lexer.hpp"

#include <cctype>

namespace sepinv::detail {

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (text.substr(i, 2) == "//") {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (text.substr(i, 2) == "/*") {
      SourceLoc start{line, col};
      std::size_t end = text.find("*/", i + 2);
      if (end == std::string_view::npos) throw ParseError(start, "unterminated comment");
      advance(end + 2 - i);
      continue;
    }
    Token tok;
    tok.loc = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      tok.kind = Token::Kind::Ident;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      tok.kind = Token::Kind::Number;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else {
      static constexpr std::string_view two[] = {"&&", "||", "==", "!=", "->", "<=", ">="};
      tok.kind = Token::Kind::Punct;
      std::string_view pair = text.substr(i, 2);
      bool matched = false;
      for (auto t : two) {
        if (pair == t) {
          tok.text = std::string(t);
          matched = true;
          break;
        }
      }
      if (!matched) {
        static constexpr std::string_view one = "*&(),;{}=<>:!|";
        if (one.find(c) == std::string_view::npos)
          throw ParseError(tok.loc, std::string("unexpected character '") + c + "'");
        tok.text = std::string(1, c);
      }
      advance(tok.text.size());
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

}  // namespace sepinv::detail
