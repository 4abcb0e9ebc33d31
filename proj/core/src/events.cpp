#include "rotpba/events.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>

#include "rotpba/errors.hpp"
#include "rotpba/io.hpp"

namespace rotpba {

namespace {

bool has_gz_suffix(const std::string& path) {
  return path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

const char* skip_space(const char* p, const char* end) {
  while (p < end && (*p == ' ' || *p == '\t' || *p == '\r' || *p == '\n')) ++p;
  return p;
}

[[noreturn]] void parse_failure(const std::string& path, std::size_t line, const char* what) {
  throw Error(ErrorKind::kParse, path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

PairingResult pair_events(const std::vector<Event>& stream, const TimeWindow& window, int width,
                          int height) {
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  PairingResult out;
  std::vector<std::size_t> last(static_cast<std::size_t>(width) * height, kNone);
  double previous_t = -std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < stream.size(); ++k) {
    const Event& e = stream[k];
    if (e.t < previous_t) {
      throw Error(ErrorKind::kIngest, "events: stream not sorted by time at index " + std::to_string(k));
    }
    previous_t = e.t;
    if (e.x < 0 || e.y < 0 || e.x >= width || e.y >= height) {
      throw Error(ErrorKind::kIngest, "events: pixel outside the sensor at index " + std::to_string(k));
    }
    if (!window.contains(e.t)) {
      ++out.outside_window;
      continue;
    }
    std::size_t& prev = last[static_cast<std::size_t>(e.y) * width + e.x];
    if (prev == kNone) {
      out.first_events.push_back(k);
      prev = k;
      continue;
    }
    const double t_prev = stream[prev].t;
    if (!(e.t > t_prev)) {
      ++out.zero_interval;
      continue;
    }
    out.pairs.push_back({k, e.t, t_prev, e.x, e.y, e.pol});
    prev = k;
  }
  return out;
}

EventStream load_events(const std::string& path, EventReadStats* stats) {
  // zlib reads uncompressed files transparently, so one code path serves both.
  GzHandle file(gzopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorKind::kIo, "events: cannot open " + path);
  gzbuffer(file.get(), 1 << 18);

  EventStream events;
  EventReadStats local;
  char buffer[4096];
  std::size_t line_no = 0;
  while (gzgets(file.get(), buffer, sizeof(buffer)) != nullptr) {
    ++line_no;
    const char* end = buffer + std::char_traits<char>::length(buffer);
    const char* p = skip_space(buffer, end);
    if (p == end) continue;
    if (*p == '#') {
      ++local.comments;
      continue;
    }
    Event e;
    int pol = 0;
    auto r = std::from_chars(p, end, e.t);
    if (r.ec != std::errc()) parse_failure(path, line_no, "bad timestamp");
    p = skip_space(r.ptr, end);
    r = std::from_chars(p, end, e.x);
    if (r.ec != std::errc()) parse_failure(path, line_no, "bad x coordinate");
    p = skip_space(r.ptr, end);
    r = std::from_chars(p, end, e.y);
    if (r.ec != std::errc()) parse_failure(path, line_no, "bad y coordinate");
    p = skip_space(r.ptr, end);
    r = std::from_chars(p, end, pol);
    if (r.ec != std::errc() || (pol != 0 && pol != 1)) parse_failure(path, line_no, "polarity must be 0 or 1");
    p = skip_space(r.ptr, end);
    if (p != end && *p != '#') parse_failure(path, line_no, "trailing characters");
    e.pol = pol == 1 ? 1 : -1;
    events.push_back(e);
    ++local.lines;
  }
  int errnum = 0;
  gzerror(file.get(), &errnum);
  if (errnum != Z_OK && errnum != Z_STREAM_END) throw Error(ErrorKind::kIo, "events: read error in " + path);
  if (stats) *stats = local;
  return events;
}

void save_events(const EventStream& events, const std::string& path) {
  std::string text;
  text.reserve(events.size() * 28 + 64);
  text += "# t x y p\n";
  char buf[64];
  for (const Event& e : events) {
    auto r = std::to_chars(buf, buf + sizeof(buf), e.t, std::chars_format::fixed, 9);
    text.append(buf, r.ptr);
    text += ' ';
    r = std::to_chars(buf, buf + sizeof(buf), e.x);
    text.append(buf, r.ptr);
    text += ' ';
    r = std::to_chars(buf, buf + sizeof(buf), e.y);
    text.append(buf, r.ptr);
    text += e.pol > 0 ? " 1\n" : " 0\n";
  }

  const std::string tmp = temp_path_for(path);
  if (has_gz_suffix(path)) {
    GzHandle file(gzopen(tmp.c_str(), "wb"));
    if (!file) throw Error(ErrorKind::kIo, "events: cannot write " + tmp);
    std::size_t off = 0;
    while (off < text.size()) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(text.size() - off, 1u << 30));
      if (gzwrite(file.get(), text.data() + off, chunk) != static_cast<int>(chunk)) {
        throw Error(ErrorKind::kIo, "events: write error in " + tmp);
      }
      off += chunk;
    }
    if (gzclose(file.release()) != Z_OK) throw Error(ErrorKind::kIo, "events: write error in " + tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::kIo, "events: cannot move " + tmp + " to " + path);
    return;
  }
  write_file_atomic(path, text);
}

std::size_t clip_to_span(EventStream& events, double begin, double end) {
  const std::size_t before = events.size();
  std::erase_if(events, [&](const Event& e) { return e.t < begin || e.t > end; });
  return before - events.size();
}

}  // namespace rotpba
