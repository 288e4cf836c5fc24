#include <cctype>
#include <cstdlib>
#include <string>

#include "dipsim/sequence.hpp"

namespace dipsim {

SequenceParseError::SequenceParseError(const std::string& msg, int line, int col,
                                       std::size_t offset)
    : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                         std::to_string(col)),
      line_(line),
      col_(col),
      offset_(offset) {}

namespace {

class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) {}

  Sequence parse() {
    Sequence seq;
    seq.prologue = parse_events(true, ';');
    expect(';');
    skip_ws();
    expect('[');
    seq.cycle = parse_events(false, ']');
    expect(']');
    skip_ws();
    expect('*');
    seq.repeats = parse_int();
    if (seq.repeats < 1) fail("repeat count must be at least 1");
    skip_ws();
    if (!eof()) fail("unexpected trailing input");
    seq.validate();
    return seq;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SequenceParseError(msg, line_, col_, pos_);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }

  char get() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
  }

  void expect(char c) {
    skip_ws();
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  std::string read_word() {
    std::string w;
    while (!eof() && std::isalpha(static_cast<unsigned char>(peek()))) w += get();
    return w;
  }

  double read_number() {
    skip_ws();
    std::string num;
    bool digits = false;
    while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
      num += get();
      digits = true;
    }
    if (!eof() && peek() == '.') {
      num += get();
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
        num += get();
        digits = true;
      }
    }
    if (!digits) fail("expected a number");
    if (!eof() && (peek() == 'e' || peek() == 'E')) {
      std::size_t save_pos = pos_;
      int save_line = line_, save_col = col_;
      std::string exp;
      exp += get();
      if (!eof() && (peek() == '+' || peek() == '-')) exp += get();
      if (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) exp += get();
        num += exp;
      } else {
        // not an exponent (e.g. "36u" has no 'e'; this covers "1e" + unit typo)
        pos_ = save_pos;
        line_ = save_line;
        col_ = save_col;
      }
    }
    return std::strtod(num.c_str(), nullptr);
  }

  int parse_int() {
    skip_ws();
    if (eof() || !std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a repeat count");
    long v = 0;
    while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (get() - '0');
      if (v > 1000000000L) fail("repeat count too large");
    }
    return static_cast<int>(v);
  }

  double parse_phase() {
    skip_ws();
    if (eof()) fail("expected phase");
    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) ||
        ((c == '+' || c == '-') && pos_ + 1 < text_.size() &&
         std::isalpha(static_cast<unsigned char>(text_[pos_ + 1])))) {
      std::string name;
      if (c == '+' || c == '-') name += get();
      name += read_word();
      try {
        return phase_from_name(name);
      } catch (const std::invalid_argument&) {
        fail("unknown phase '" + name + "'");
      }
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-') {
      double sign = 1.0;
      if (c == '+' || c == '-') {
        if (get() == '-') sign = -1.0;
      }
      return sign * read_number();
    }
    fail("expected phase");
  }

  double parse_time() {
    double v = read_number();
    std::string unit = read_word();
    double mult;
    if (unit == "s")
      mult = 1.0;
    else if (unit == "ms" || unit == "m")
      mult = 1e-3;
    else if (unit == "us" || unit == "u")
      mult = 1e-6;
    else if (unit == "ns" || unit == "n")
      mult = 1e-9;
    else
      fail(unit.empty() ? "time needs a unit suffix (s, ms, us, ns)"
                        : "unknown time unit '" + unit + "'");
    return v * mult;
  }

  std::vector<Event> parse_events(bool prologue, char terminator) {
    std::vector<Event> events;
    while (true) {
      skip_ws();
      if (eof() || peek() == terminator) return events;
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::string word = read_word();
        if (word == "d") {
          expect('(');
          double t = parse_time();
          expect(')');
          events.push_back(DelayEvent{t});
        } else if (word == "echo") {
          if (prologue) fail("echo markers are only allowed inside the cycle");
          expect('(');
          double p = parse_phase();
          expect(')');
          events.push_back(EchoMarker{p});
        } else {
          fail("unknown event '" + word + "'");
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        double angle = read_number();
        if (!(angle > 0)) fail("pulse angle must be positive");
        expect('(');
        double p = parse_phase();
        expect(')');
        events.push_back(PulseEvent{angle, p, prologue});
      } else {
        fail("unexpected character '" + std::string(1, c) + "'");
      }
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

Sequence parse_sequence(const std::string& text) { return Parser(text).parse(); }

}  // namespace dipsim
