#include "zoterag/pdf_text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "pdf/pdf_fonts.hpp"
#include "pdf/pdf_object.hpp"
#include "zoterag/error.hpp"
#include "zoterag/fs_util.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag {

namespace {

using pdf::Document;
using pdf::FontDecoder;
using pdf::Object;

struct Matrix {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  // this x other, PDF row-vector convention
  Matrix times(const Matrix& o) const {
    return {a * o.a + b * o.c,       a * o.b + b * o.d,
            c * o.a + d * o.c,       c * o.b + d * o.d,
            e * o.a + f * o.c + o.e, e * o.b + f * o.d + o.f};
  }
  static Matrix translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
};

Matrix matrix_from(const std::vector<Object>& ops, std::size_t first) {
  return {ops[first].number,     ops[first + 1].number, ops[first + 2].number,
          ops[first + 3].number, ops[first + 4].number, ops[first + 5].number};
}

constexpr int kMaxFormDepth = 8;

// Accumulates one page of text, deciding where line and paragraph breaks go
// from the device-space position of each glyph.
class PageWriter {
 public:
  void glyph(const std::string& text, double x, double y, double size,
             double advance) {
    if (text.empty()) {
      pen_x_ = x + advance;
      return;
    }
    if (has_pos_) {
      const double dy = y - pen_y_;
      const double min_size = std::min(size, last_size_);
      if (std::abs(dy) > 0.5 * min_size) {
        out_ += std::abs(dy) > 1.6 * min_size ? "\n\n" : "\n";
      } else if (x - pen_x_ > 0.15 * size && !ends_with_space()) {
        out_ += ' ';
      } else if (x < pen_x_ - 2.0 * size && !ends_with_space()) {
        out_ += ' ';
      }
    }
    out_ += text;
    has_pos_ = true;
    pen_x_ = x + advance;
    pen_y_ = y;
    last_size_ = size;
  }

  std::string finish() const {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= out_.size()) {
      std::size_t nl = out_.find('\n', start);
      if (nl == std::string::npos) nl = out_.size();
      std::string line = out_.substr(start, nl - start);
      while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
      lines.push_back(std::move(line));
      start = nl + 1;
    }
    auto blank = [](const std::string& s) { return text::is_blank(s); };
    while (!lines.empty() && blank(lines.front())) lines.erase(lines.begin());
    while (!lines.empty() && blank(lines.back())) lines.pop_back();
    std::string page;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i > 0) page += '\n';
      page += lines[i];
    }
    return page;
  }

 private:
  bool ends_with_space() const {
    return !out_.empty() && (out_.back() == ' ' || out_.back() == '\n');
  }

  std::string out_;
  bool has_pos_ = false;
  double pen_x_ = 0;
  double pen_y_ = 0;
  double last_size_ = 0;
};

class ContentInterpreter {
 public:
  ContentInterpreter(const Document& doc, PageWriter& writer)
      : doc_(doc), writer_(writer) {}

  void run(std::string_view content, const Object* resources, int depth) {
    pdf::Lexer lex(content);
    std::vector<Object> ops;
    while (true) {
      Object tok;
      try {
        if (lex.at_end()) break;
        tok = lex.next_token();
      } catch (const std::exception&) {
        // Skip one byte past the damage and keep going.
        lex.seek(lex.pos() + 1);
        ops.clear();
        continue;
      }
      if (tok.kind != Object::Kind::kKeyword) {
        ops.push_back(std::move(tok));
        continue;
      }
      if (tok.text == "BI") {
        skip_inline_image(lex);
        ops.clear();
        continue;
      }
      execute(tok.text, ops, resources, depth);
      ops.clear();
    }
  }

 private:
  struct GraphicsState {
    Matrix ctm;
    const FontDecoder* font = nullptr;
    double size = 0;
    double char_spacing = 0;
    double word_spacing = 0;
    double h_scale = 1;
    double leading = 0;
    double rise = 0;
  };

  static bool numbers(const std::vector<Object>& ops, std::size_t n) {
    if (ops.size() < n) return false;
    for (std::size_t i = ops.size() - n; i < ops.size(); ++i) {
      if (ops[i].kind != Object::Kind::kNumber) return false;
    }
    return true;
  }

  void execute(const std::string& op, const std::vector<Object>& all,
               const Object* resources, int depth) {
    // Use the trailing operands so stray leading tokens do not shift them.
    auto tail = [&](std::size_t n) {
      return std::vector<Object>(all.end() - static_cast<long>(n), all.end());
    };
    if (op == "q") {
      stack_.push_back(gs_);
    } else if (op == "Q") {
      if (!stack_.empty()) {
        gs_ = stack_.back();
        stack_.pop_back();
      }
    } else if (op == "cm" && numbers(all, 6)) {
      gs_.ctm = matrix_from(tail(6), 0).times(gs_.ctm);
    } else if (op == "BT") {
      tm_ = tlm_ = Matrix{};
    } else if (op == "Tf" && all.size() >= 2) {
      const auto ops = tail(2);
      gs_.font = font(ops[0].text, resources);
      gs_.size = ops[1].number;
    } else if (op == "Tc" && numbers(all, 1)) {
      gs_.char_spacing = all.back().number;
    } else if (op == "Tw" && numbers(all, 1)) {
      gs_.word_spacing = all.back().number;
    } else if (op == "Tz" && numbers(all, 1)) {
      gs_.h_scale = all.back().number / 100.0;
    } else if (op == "TL" && numbers(all, 1)) {
      gs_.leading = all.back().number;
    } else if (op == "Ts" && numbers(all, 1)) {
      gs_.rise = all.back().number;
    } else if (op == "Td" && numbers(all, 2)) {
      const auto ops = tail(2);
      move_line(ops[0].number, ops[1].number);
    } else if (op == "TD" && numbers(all, 2)) {
      const auto ops = tail(2);
      gs_.leading = -ops[1].number;
      move_line(ops[0].number, ops[1].number);
    } else if (op == "Tm" && numbers(all, 6)) {
      tm_ = tlm_ = matrix_from(tail(6), 0);
    } else if (op == "T*") {
      move_line(0, -gs_.leading);
    } else if (op == "Tj" && !all.empty()) {
      show(all.back().text);
    } else if (op == "'" && !all.empty()) {
      move_line(0, -gs_.leading);
      show(all.back().text);
    } else if (op == "\"" && all.size() >= 3) {
      const auto ops = tail(3);
      gs_.word_spacing = ops[0].number;
      gs_.char_spacing = ops[1].number;
      move_line(0, -gs_.leading);
      show(ops[2].text);
    } else if (op == "TJ" && !all.empty() && all.back().kind == Object::Kind::kArray) {
      for (const auto& item : all.back().items) {
        if (item.kind == Object::Kind::kString) {
          show(item.text);
        } else if (item.kind == Object::Kind::kNumber) {
          const double tx = -item.number / 1000.0 * gs_.size * gs_.h_scale;
          tm_ = Matrix::translate(tx, 0).times(tm_);
        }
      }
    } else if (op == "Do" && !all.empty() && all.back().kind == Object::Kind::kName) {
      draw_xobject(all.back().text, resources, depth);
    }
  }

  void move_line(double tx, double ty) {
    tlm_ = Matrix::translate(tx, ty).times(tlm_);
    tm_ = tlm_;
  }

  void show(const std::string& bytes) {
    if (gs_.font == nullptr) return;
    for (const auto& g : gs_.font->decode(bytes)) {
      const Matrix trm = tm_.times(gs_.ctm);
      const double x = trm.c * gs_.rise + trm.e;
      const double y = trm.d * gs_.rise + trm.f;
      const double device_size = std::abs(gs_.size) * std::hypot(trm.c, trm.d);
      const double tx = (g.width * gs_.size + gs_.char_spacing +
                         (g.is_space ? gs_.word_spacing : 0.0)) * gs_.h_scale;
      const double device_advance = tx * std::hypot(trm.a, trm.b);
      writer_.glyph(g.text, x, y, device_size > 0 ? device_size : 1.0, device_advance);
      tm_ = Matrix::translate(tx, 0).times(tm_);
    }
  }

  const Object* resource_entry(const Object* resources, std::string_view category,
                               const std::string& name) const {
    if (resources == nullptr) return nullptr;
    const Object& res = doc_.resolve(*resources);
    const Object* cat = res.get(category);
    if (cat == nullptr) return nullptr;
    const Object* entry = doc_.resolve(*cat).get(name);
    return entry == nullptr ? nullptr : &doc_.resolve(*entry);
  }

  const FontDecoder* font(const std::string& name, const Object* resources) {
    const Object* font_obj = resource_entry(resources, "Font", name);
    if (font_obj == nullptr) return nullptr;
    auto it = fonts_.find(font_obj);
    if (it == fonts_.end()) {
      it = fonts_.emplace(font_obj, std::make_unique<FontDecoder>(*font_obj, doc_)).first;
    }
    return it->second.get();
  }

  void draw_xobject(const std::string& name, const Object* resources, int depth) {
    if (depth >= kMaxFormDepth) return;
    const Object* xobj = resource_entry(resources, "XObject", name);
    if (xobj == nullptr || xobj->kind != Object::Kind::kStream ||
        !xobj->name_is("Subtype", "Form")) {
      return;
    }
    std::string content;
    try {
      content = pdf::decode_stream(*xobj, &doc_);
    } catch (const std::exception&) {
      return;
    }
    const GraphicsState saved = gs_;
    const Matrix saved_tm = tm_;
    const Matrix saved_tlm = tlm_;
    if (const Object* m = xobj->get("Matrix")) {
      const Object& arr = doc_.resolve(*m);
      if (arr.items.size() == 6) gs_.ctm = matrix_from(arr.items, 0).times(gs_.ctm);
    }
    const Object* form_res = xobj->get("Resources");
    run(content, form_res != nullptr ? form_res : resources, depth + 1);
    gs_ = saved;
    tm_ = saved_tm;
    tlm_ = saved_tlm;
  }

  static void skip_inline_image(pdf::Lexer& lex) {
    const std::string_view data = lex.data();
    std::size_t id = data.find("ID", lex.pos());
    if (id == std::string_view::npos) {
      lex.seek(data.size());
      return;
    }
    std::size_t pos = id + 3;
    while (pos + 1 < data.size()) {
      const std::size_t ei = data.find("EI", pos);
      if (ei == std::string_view::npos) break;
      const bool before = ei > 0 && pdf::is_pdf_space(data[ei - 1]);
      const bool after = ei + 2 >= data.size() || pdf::is_pdf_space(data[ei + 2]) ||
                         pdf::is_pdf_delim(data[ei + 2]);
      if (before && after) {
        lex.seek(ei + 2);
        return;
      }
      pos = ei + 2;
    }
    lex.seek(data.size());
  }

  const Document& doc_;
  PageWriter& writer_;
  GraphicsState gs_;
  std::vector<GraphicsState> stack_;
  Matrix tm_;
  Matrix tlm_;
  std::map<const Object*, std::unique_ptr<FontDecoder>> fonts_;
};

const Object* inherited(const Document& doc, const Object& page, std::string_view key) {
  const Object* node = &page;
  for (int depth = 0; node != nullptr && depth < 64; ++depth) {
    if (const Object* v = node->get(key)) return v;
    const Object* parent = node->get("Parent");
    node = parent == nullptr ? nullptr : &doc.resolve(*parent);
  }
  return nullptr;
}

std::string page_content(const Document& doc, const Object& page) {
  const Object* contents = page.get("Contents");
  if (contents == nullptr) return {};
  const Object& c = doc.resolve(*contents);
  std::vector<const Object*> streams;
  if (c.kind == Object::Kind::kStream) {
    streams.push_back(&c);
  } else if (c.kind == Object::Kind::kArray) {
    for (const auto& item : c.items) streams.push_back(&doc.resolve(item));
  }
  std::string joined;
  for (const Object* s : streams) {
    if (s->kind != Object::Kind::kStream) continue;
    try {
      joined += pdf::decode_stream(*s, &doc);
      joined += '\n';
    } catch (const std::exception&) {
    }
  }
  return joined;
}

}  // namespace

PdfText extract_pdf_text(std::string_view bytes) {
  std::size_t head = 0;
  while (head < bytes.size() && head < 1024 && bytes.substr(head, 4) != "%PDF") ++head;
  if (bytes.substr(head, 4) != "%PDF") {
    throw Error(ErrorCode::kNotAPdf, "file is not a PDF");
  }

  std::unique_ptr<Document> doc;
  try {
    doc = std::make_unique<Document>(std::string(bytes));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kExtractionFailed, std::string("unreadable PDF: ") + e.what());
  }
  if (doc->encrypted()) {
    throw Error(ErrorCode::kExtractionFailed, "encrypted PDFs are not supported");
  }
  const auto pages = doc->pages();
  if (pages.empty()) {
    throw Error(ErrorCode::kExtractionFailed, "PDF has no pages");
  }

  PdfText result;
  result.page_count = pages.size();
  bool any_text = false;
  for (const Object* page : pages) {
    PageWriter writer;
    try {
      ContentInterpreter interp(*doc, writer);
      interp.run(page_content(*doc, *page), inherited(*doc, *page, "Resources"), 0);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      // A page that cannot be interpreted contributes what it produced.
    }
    result.pages.push_back(writer.finish());
    if (!text::is_blank(result.pages.back())) any_text = true;
  }
  if (!any_text) {
    throw Error(ErrorCode::kEmptyDocument, "PDF contains no extractable text");
  }
  for (std::size_t i = 0; i < result.pages.size(); ++i) {
    if (i > 0) result.text += "\n\n";
    result.text += result.pages[i];
  }
  return result;
}

PdfText extract_text(const std::filesystem::path& pdf_file) {
  return extract_pdf_text(fs_util::read_file(pdf_file));
}

}  // namespace zoterag
