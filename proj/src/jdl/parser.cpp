#include "wms/jdl/parser.hpp"

#include "wms/util/strings.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace wms::jdl {

SyntaxError::SyntaxError(int line, int column, std::vector<std::string> expected, std::string found)
    : std::runtime_error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) +
                         ": expected " + join(expected, " or ") + ", found " + found),
      line_(line), column_(column), expected_(std::move(expected)), found_(std::move(found))
{
}

namespace {

enum class Tok {
    End,
    Ident,
    Int,
    Real,
    String,
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Assign,
    Dot,
    OrOr,
    AndAnd,
    EqEq,
    NotEq,
    Less,
    LessEq,
    Greater,
    GreaterEq,
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
};

struct Token {
    Tok kind = Tok::End;
    std::string text; // identifier spelling / decoded string literal
    std::int64_t int_value = 0;
    double real_value = 0;
    int line = 1;
    int column = 1;
};

std::string describe(const Token& t)
{
    switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier '" + t.text + "'";
    case Tok::Int:
    case Tok::Real: return "number";
    case Tok::String: return "string";
    default: return "'" + t.text + "'";
    }
}

const std::vector<std::string> kOperandStart = {"literal", "attribute reference", "'('", "'{'",
                                                "'!'",     "'-'",                 "'member'"};

constexpr int kMaxNesting = 200;

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next()
    {
        skip_space_and_comments();
        Token t;
        t.line = line_;
        t.column = col_;
        if (pos_ >= src_.size())
            return t;
        unsigned char c = static_cast<unsigned char>(src_[pos_]);
        if (std::isalpha(c) || c == '_')
            return ident(t);
        if (std::isdigit(c))
            return number(t);
        if (c == '"')
            return string(t);
        return punct(t);
    }

private:
    char peek(std::size_t off = 0) const
    {
        return pos_ + off < src_.size() ? src_[pos_ + off] : '\0';
    }

    void advance()
    {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space_and_comments()
    {
        while (pos_ < src_.size()) {
            unsigned char c = static_cast<unsigned char>(src_[pos_]);
            if (std::isspace(c)) {
                advance();
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    advance();
            } else {
                break;
            }
        }
    }

    [[noreturn]] void fail(const Token& at, std::vector<std::string> expected, std::string found)
    {
        throw SyntaxError(at.line, at.column, std::move(expected), std::move(found));
    }

    Token ident(Token t)
    {
        std::size_t start = pos_;
        while (pos_ < src_.size()) {
            unsigned char c = static_cast<unsigned char>(src_[pos_]);
            if (!std::isalnum(c) && c != '_')
                break;
            advance();
        }
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
        return t;
    }

    Token number(Token t)
    {
        std::size_t start = pos_;
        bool real = false;
        while (std::isdigit(static_cast<unsigned char>(peek())))
            advance();
        if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            real = true;
            advance();
            while (std::isdigit(static_cast<unsigned char>(peek())))
                advance();
        }
        if (peek() == 'e' || peek() == 'E') {
            std::size_t off = 1;
            if (peek(1) == '+' || peek(1) == '-')
                off = 2;
            if (std::isdigit(static_cast<unsigned char>(peek(off)))) {
                real = true;
                for (std::size_t i = 0; i < off; ++i)
                    advance();
                while (std::isdigit(static_cast<unsigned char>(peek())))
                    advance();
            }
        }
        std::string_view text = src_.substr(start, pos_ - start);
        t.text = std::string(text);
        const char* b = text.data();
        const char* e = text.data() + text.size();
        if (real) {
            t.kind = Tok::Real;
            auto [p, ec] = std::from_chars(b, e, t.real_value);
            if (ec != std::errc{} || p != e || !std::isfinite(t.real_value))
                fail(t, {"finite real literal"}, "'" + t.text + "'");
        } else {
            t.kind = Tok::Int;
            auto [p, ec] = std::from_chars(b, e, t.int_value);
            if (ec != std::errc{} || p != e)
                fail(t, {"64-bit integer literal"}, "'" + t.text + "'");
        }
        return t;
    }

    Token string(Token t)
    {
        advance(); // opening quote
        std::string out;
        for (;;) {
            if (pos_ >= src_.size() || src_[pos_] == '\n')
                fail(t, {"closing '\"'"}, "unterminated string");
            char c = src_[pos_];
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= src_.size())
                    fail(t, {"closing '\"'"}, "unterminated string");
                char esc = src_[pos_];
                switch (esc) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                default: {
                    Token at;
                    at.line = line_;
                    at.column = col_;
                    fail(at, {"escape sequence"}, std::string("'\\") + esc + "'");
                }
                }
                advance();
                continue;
            }
            out += c;
            advance();
        }
        t.kind = Tok::String;
        t.text = std::move(out);
        return t;
    }

    Token punct(Token t)
    {
        char c = peek();
        char d = peek(1);
        auto two = [&](Tok k, const char* s) {
            advance();
            advance();
            t.kind = k;
            t.text = s;
            return t;
        };
        auto one = [&](Tok k) {
            t.kind = k;
            t.text = std::string(1, c);
            advance();
            return t;
        };
        switch (c) {
        case '|':
            if (d == '|')
                return two(Tok::OrOr, "||");
            break;
        case '&':
            if (d == '&')
                return two(Tok::AndAnd, "&&");
            break;
        case '=':
            if (d == '=')
                return two(Tok::EqEq, "==");
            return one(Tok::Assign);
        case '!':
            if (d == '=')
                return two(Tok::NotEq, "!=");
            return one(Tok::Bang);
        case '<':
            if (d == '=')
                return two(Tok::LessEq, "<=");
            return one(Tok::Less);
        case '>':
            if (d == '=')
                return two(Tok::GreaterEq, ">=");
            return one(Tok::Greater);
        case '[': return one(Tok::LBracket);
        case ']': return one(Tok::RBracket);
        case '(': return one(Tok::LParen);
        case ')': return one(Tok::RParen);
        case '{': return one(Tok::LBrace);
        case '}': return one(Tok::RBrace);
        case ';': return one(Tok::Semi);
        case ',': return one(Tok::Comma);
        case '.': return one(Tok::Dot);
        case '+': return one(Tok::Plus);
        case '-': return one(Tok::Minus);
        case '*': return one(Tok::Star);
        case '/': return one(Tok::Slash);
        default: break;
        }
        std::string shown;
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isprint(uc)) {
            shown = std::string("'") + c + "'";
        } else {
            char buf[8];
            std::snprintf(buf, sizeof buf, "0x%02x", uc);
            shown = std::string("byte ") + buf;
        }
        fail(t, {"token"}, shown);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view text) : lex_(text) { tok_ = lex_.next(); }

    bool at(Tok k) const { return tok_.kind == k; }

    Expr whole_expression()
    {
        Expr e = expression();
        expect_end({"operator", "end of input"});
        return e;
    }

    Ad ad(AdRole role)
    {
        Ad out(role);
        expect(Tok::LBracket, "'['");
        while (!at(Tok::RBracket)) {
            if (!at(Tok::Ident) || is_reserved(tok_.text))
                fail({"attribute name", "']'"});
            std::string name = tok_.text;
            advance();
            expect(Tok::Assign, "'='");
            out.set(name, expression());
            if (at(Tok::Semi)) {
                advance();
                continue;
            }
            if (!at(Tok::RBracket))
                fail({"';'", "']'"});
        }
        advance();
        return out;
    }

    void expect_end(std::vector<std::string> expected)
    {
        if (!at(Tok::End))
            fail(std::move(expected));
    }

private:
    static bool is_reserved(const std::string& word)
    {
        static const char* kWords[] = {"true", "false", "undefined", "error", "self", "other", "member"};
        for (const char* w : kWords)
            if (iequals(word, w))
                return true;
        return false;
    }

    void advance() { tok_ = lex_.next(); }

    [[noreturn]] void fail(std::vector<std::string> expected)
    {
        throw SyntaxError(tok_.line, tok_.column, std::move(expected), describe(tok_));
    }

    void expect(Tok k, const char* what)
    {
        if (!at(k))
            fail({what});
        advance();
    }

    struct DepthGuard {
        DepthGuard(Parser& p) : p_(p)
        {
            if (++p_.nesting_ > kMaxNesting)
                throw SyntaxError(p_.tok_.line, p_.tok_.column, {"shallower nesting"},
                                  "nesting deeper than " + std::to_string(kMaxNesting));
        }
        ~DepthGuard() { --p_.nesting_; }
        Parser& p_;
    };

    Expr expression()
    {
        DepthGuard guard(*this);
        return logical_or();
    }

    Expr logical_or()
    {
        Expr lhs = logical_and();
        while (at(Tok::OrOr)) {
            advance();
            lhs = make_binary(BinaryOp::Or, lhs, logical_and());
        }
        return lhs;
    }

    Expr logical_and()
    {
        Expr lhs = equality();
        while (at(Tok::AndAnd)) {
            advance();
            lhs = make_binary(BinaryOp::And, lhs, equality());
        }
        return lhs;
    }

    Expr equality()
    {
        Expr lhs = relational();
        while (at(Tok::EqEq) || at(Tok::NotEq)) {
            BinaryOp op = at(Tok::EqEq) ? BinaryOp::Eq : BinaryOp::Ne;
            advance();
            lhs = make_binary(op, lhs, relational());
        }
        return lhs;
    }

    Expr relational()
    {
        Expr lhs = additive();
        for (;;) {
            BinaryOp op;
            switch (tok_.kind) {
            case Tok::Less: op = BinaryOp::Lt; break;
            case Tok::LessEq: op = BinaryOp::Le; break;
            case Tok::Greater: op = BinaryOp::Gt; break;
            case Tok::GreaterEq: op = BinaryOp::Ge; break;
            default: return lhs;
            }
            advance();
            lhs = make_binary(op, lhs, additive());
        }
    }

    Expr additive()
    {
        Expr lhs = multiplicative();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            BinaryOp op = at(Tok::Plus) ? BinaryOp::Add : BinaryOp::Sub;
            advance();
            lhs = make_binary(op, lhs, multiplicative());
        }
        return lhs;
    }

    Expr multiplicative()
    {
        Expr lhs = unary();
        while (at(Tok::Star) || at(Tok::Slash)) {
            BinaryOp op = at(Tok::Star) ? BinaryOp::Mul : BinaryOp::Div;
            advance();
            lhs = make_binary(op, lhs, unary());
        }
        return lhs;
    }

    Expr unary()
    {
        if (at(Tok::Bang) || at(Tok::Minus)) {
            DepthGuard guard(*this);
            UnaryOp op = at(Tok::Bang) ? UnaryOp::Not : UnaryOp::Negate;
            advance();
            return make_unary(op, unary());
        }
        return primary();
    }

    Expr primary()
    {
        switch (tok_.kind) {
        case Tok::Int: {
            auto v = tok_.int_value;
            advance();
            return make_literal(Value{v});
        }
        case Tok::Real: {
            auto v = tok_.real_value;
            advance();
            return make_literal(Value{v});
        }
        case Tok::String: {
            auto s = tok_.text;
            advance();
            return make_literal(Value{std::move(s)});
        }
        case Tok::LParen: {
            advance();
            Expr e = expression();
            expect(Tok::RParen, "')'");
            return e;
        }
        case Tok::LBrace: return list();
        case Tok::Ident: return identifier();
        default: fail(kOperandStart);
        }
    }

    Expr list()
    {
        DepthGuard guard(*this);
        advance(); // {
        std::vector<Expr> items;
        if (!at(Tok::RBrace)) {
            items.push_back(expression());
            while (at(Tok::Comma)) {
                advance();
                items.push_back(expression());
            }
        }
        if (!at(Tok::RBrace))
            fail({"','", "'}'"});
        advance();
        return make_list(std::move(items));
    }

    Expr identifier()
    {
        std::string word = tok_.text;
        if (iequals(word, "true") || iequals(word, "false")) {
            advance();
            return make_literal(Value{iequals(word, "true")});
        }
        if (iequals(word, "undefined")) {
            advance();
            return make_literal(Value::undefined());
        }
        if (iequals(word, "error")) {
            advance();
            return make_literal(Value::error());
        }
        if (iequals(word, "member")) {
            advance();
            expect(Tok::LParen, "'('");
            Expr scalar = expression();
            expect(Tok::Comma, "','");
            Expr list = expression();
            expect(Tok::RParen, "')'");
            return make_member(std::move(scalar), std::move(list));
        }
        if (iequals(word, "self") || iequals(word, "other")) {
            Scope scope = iequals(word, "self") ? Scope::Self : Scope::Other;
            advance();
            expect(Tok::Dot, "'.'");
            if (!at(Tok::Ident) || is_reserved(tok_.text))
                fail({"attribute name"});
            std::string name = tok_.text;
            advance();
            return make_ref(scope, std::move(name));
        }
        advance();
        return make_ref(Scope::Self, std::move(word));
    }

    Lexer lex_;
    Token tok_;
    int nesting_ = 0;
};

} // namespace

Expr parse_expr(std::string_view text)
{
    Parser p(text);
    return p.whole_expression();
}

Ad parse_ad(std::string_view text, AdRole role)
{
    Parser p(text);
    Ad ad = p.ad(role);
    p.expect_end({"end of input"});
    return ad;
}

std::vector<Ad> parse_ads(std::string_view text, AdRole role)
{
    Parser p(text);
    std::vector<Ad> out;
    while (!p.at(Tok::End))
        out.push_back(p.ad(role));
    return out;
}

std::variant<Expr, Ad> parse(std::string_view text, AdRole role)
{
    Parser p(text);
    if (p.at(Tok::LBracket)) {
        Ad ad = p.ad(role);
        p.expect_end({"end of input"});
        return ad;
    }
    return p.whole_expression();
}

} // namespace wms::jdl
