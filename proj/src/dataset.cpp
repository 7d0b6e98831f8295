#include "seld/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seld/errors.hpp"

namespace seld {

const std::array<std::string, kNumClasses>& class_names() {
  static const std::array<std::string, kNumClasses> names = {
      "Alarm",         "Crying Baby",  "Crash",        "Barking Dog",
      "Running Engine", "Female Scream", "Female Speech", "Burning Fire",
      "Footsteps",     "Knocking Door", "Male Scream",  "Male Speech",
      "Ringing Phone", "Piano"};
  return names;
}

void EventAnnotationList::sort_canonical() {
  std::sort(rows.begin(), rows.end(),
            [](const AnnotationRow& a, const AnnotationRow& b) {
              if (a.frame != b.frame) return a.frame < b.frame;
              if (a.class_id != b.class_id) return a.class_id < b.class_id;
              return a.track_id < b.track_id;
            });
}

long EventAnnotationList::max_frame() const {
  long m = -1;
  for (const AnnotationRow& r : rows) m = std::max(m, r.frame);
  return m;
}

namespace {

double parse_number(std::string_view tok, const std::string& origin, int line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw MalformedRow(origin + ":" + std::to_string(line) +
                       ": bad numeric field '" + std::string(tok) + "'");
  return v;
}

long parse_integer(std::string_view tok, const std::string& origin, int line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw MalformedRow(origin + ":" + std::to_string(line) +
                       ": bad integer field '" + std::string(tok) + "'");
  return v;
}

}  // namespace

EventAnnotationList parse_metadata_text(const std::string& text,
                                        const std::string& origin) {
  EventAnnotationList ann;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::array<std::string_view, 5> fields;
    int nf = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (nf >= 5)
          throw MalformedRow(origin + ":" + std::to_string(line_no) +
                             ": expected 5 fields");
        fields[nf++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (nf != 5)
      throw MalformedRow(origin + ":" + std::to_string(line_no) +
                         ": expected 5 fields, got " + std::to_string(nf));

    AnnotationRow row;
    row.frame = parse_integer(fields[0], origin, line_no);
    row.class_id = static_cast<int>(parse_integer(fields[1], origin, line_no));
    row.track_id = static_cast<int>(parse_integer(fields[2], origin, line_no));
    row.azimuth_deg = parse_number(fields[3], origin, line_no);
    row.elevation_deg = parse_number(fields[4], origin, line_no);

    if (row.class_id < 0 || row.class_id >= kNumClasses)
      throw OutOfRangeClass(origin + ":" + std::to_string(line_no) +
                            ": class id " + std::to_string(row.class_id) +
                            " outside 0..13");
    if (row.frame < 0)
      throw MalformedRow(origin + ":" + std::to_string(line_no) +
                         ": negative frame index");
    if (row.elevation_deg < -90.0 || row.elevation_deg > 90.0)
      throw MalformedRow(origin + ":" + std::to_string(line_no) +
                         ": elevation outside [-90, 90]");
    row.azimuth_deg = wrap_azimuth_deg(row.azimuth_deg);
    ann.rows.push_back(row);
  }
  ann.sort_canonical();
  return ann;
}

EventAnnotationList parse_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedRow("cannot open metadata file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metadata_text(ss.str(), path.filename().string());
}

namespace {

// Shortest round-trip decimal for a double (std::to_chars), so that
// parse(emit(x)) == x exactly.
std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string emit_metadata_text(const EventAnnotationList& ann) {
  EventAnnotationList sorted = ann;
  sorted.sort_canonical();
  std::string out;
  for (const AnnotationRow& r : sorted.rows) {
    out += std::to_string(r.frame);
    out += ',';
    out += std::to_string(r.class_id);
    out += ',';
    out += std::to_string(r.track_id);
    out += ',';
    out += format_number(r.azimuth_deg);
    out += ',';
    out += format_number(r.elevation_deg);
    out += '\n';
  }
  return out;
}

void emit_metadata(const EventAnnotationList& ann,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MalformedRow("cannot write metadata file " + path.string());
  out << emit_metadata_text(ann);
}

// ---------------------------------------------------------------------------
// WAV
// ---------------------------------------------------------------------------

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) { return p[0] | (p[1] << 8); }

void append_u32(std::string& s, std::uint32_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
  s.push_back(char((v >> 16) & 0xff));
  s.push_back(char((v >> 24) & 0xff));
}
void append_u16(std::string& s, std::uint16_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
}

}  // namespace

MultichannelClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnsupportedFormat("cannot open wav file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 44 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw UnsupportedFormat(path.string() + ": not a RIFF/WAVE file");

  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const std::uint32_t chunk_len = read_u32(p + off + 4);
    const unsigned char* body = p + off + 8;
    if (off + 8 + chunk_len > n)
      throw UnsupportedFormat(path.string() + ": truncated chunk");
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16)
        throw UnsupportedFormat(path.string() + ": short fmt chunk");
      format_tag = read_u16(body);
      channels = read_u16(body + 2);
      sample_rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      if (format_tag == 0xFFFE && chunk_len >= 40)
        format_tag = read_u16(body + 24);  // extensible: subformat GUID head
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);
  }
  if (!data || channels == 0)
    throw UnsupportedFormat(path.string() + ": missing fmt or data chunk");
  if (channels != 4 && channels != 8)
    throw ChannelCountMismatch(path.string() + ": expected 4 or 8 channels, got " +
                               std::to_string(channels));

  const bool is_float = format_tag == 3;
  const bool is_pcm = format_tag == 1;
  if (!((is_pcm && (bits == 16 || bits == 24)) || (is_float && bits == 32)))
    throw UnsupportedFormat(path.string() + ": unsupported sample format (" +
                            std::to_string(format_tag) + "/" +
                            std::to_string(bits) + " bit)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_len / frame_bytes;

  MultichannelClip clip = make_clip(channels, frames, int(sample_rate),
                                    channels == 8 ? ClipFormat::kBoth
                                                  : ClipFormat::kMic);
  for (std::size_t t = 0; t < frames; ++t) {
    const unsigned char* fp = data + t * frame_bytes;
    for (int ch = 0; ch < channels; ++ch) {
      const unsigned char* sp = fp + ch * bytes_per_sample;
      double v = 0.0;
      if (is_float) {
        float f;
        std::memcpy(&f, sp, 4);
        v = f;
      } else if (bits == 16) {
        const std::int16_t s = std::int16_t(sp[0] | (sp[1] << 8));
        v = s / 32768.0;
      } else {  // 24 bit
        std::int32_t s = sp[0] | (sp[1] << 8) | (sp[2] << 16);
        if (s & 0x800000) s |= ~0xffffff;
        v = s / 8388608.0;
      }
      clip.channels[ch][t] = v;
    }
  }
  return clip;
}

void write_wav(const MultichannelClip& clip, const std::filesystem::path& path) {
  const std::uint16_t channels = std::uint16_t(clip.num_channels());
  const std::size_t frames = clip.num_samples();
  const std::uint32_t byte_rate = clip.sample_rate * channels * 4;

  std::string out;
  out.reserve(44 + frames * channels * 4);
  out += "RIFF";
  append_u32(out, std::uint32_t(36 + frames * channels * 4));
  out += "WAVEfmt ";
  append_u32(out, 16);
  append_u16(out, 3);  // IEEE float
  append_u16(out, channels);
  append_u32(out, std::uint32_t(clip.sample_rate));
  append_u32(out, byte_rate);
  append_u16(out, std::uint16_t(channels * 4));
  append_u16(out, 32);
  out += "data";
  append_u32(out, std::uint32_t(frames * channels * 4));
  for (std::size_t t = 0; t < frames; ++t) {
    for (int ch = 0; ch < channels; ++ch) {
      const float f = static_cast<float>(clip.channels[ch][t]);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      append_u32(out, u);
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UnsupportedFormat("cannot write wav file " + path.string());
  os.write(out.data(), std::streamsize(out.size()));
}

// ---------------------------------------------------------------------------
// Segments
// ---------------------------------------------------------------------------

namespace {

struct InstanceKey {
  int class_id;
  int track_id;
  bool operator==(const InstanceKey&) const = default;
  bool operator<(const InstanceKey& o) const {
    return class_id != o.class_id ? class_id < o.class_id
                                  : track_id < o.track_id;
  }
};

}  // namespace

std::vector<SegmentDescriptor> extract_segments(const EventAnnotationList& ann,
                                                const std::string& file_id,
                                                const SegmentOptions& opts) {
  EventAnnotationList sorted = ann;
  sorted.sort_canonical();
  const long total = sorted.max_frame() + 1;
  if (total <= 0) return {};

  // Active instances per frame.
  std::vector<std::vector<const AnnotationRow*>> by_frame(total);
  for (const AnnotationRow& r : sorted.rows) by_frame[r.frame].push_back(&r);

  std::vector<SegmentDescriptor> out;

  // Walk each (class, track) instance's contiguous frame spans, splitting on
  // changes of the solo/overlapped status.
  std::vector<InstanceKey> keys;
  for (const AnnotationRow& r : sorted.rows) {
    const InstanceKey k{r.class_id, r.track_id};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }

  for (const InstanceKey& key : keys) {
    long run_start = -1;
    bool run_overlap = false;
    std::vector<const AnnotationRow*> run_rows;

    auto flush = [&](long end_frame) {
      if (run_start < 0 || run_rows.empty()) return;
      SegmentDescriptor d;
      d.file_id = file_id;
      d.start_frame = run_start;
      d.end_frame = end_frame;
      d.class_id = key.class_id;
      d.track_id = key.track_id;
      d.overlapping = run_overlap;

      double spread = 0.0;
      std::array<double, 3> mean{0, 0, 0};
      for (std::size_t i = 0; i < run_rows.size(); ++i) {
        const auto ui = doa_to_unit(run_rows[i]->doa());
        for (int c = 0; c < 3; ++c) mean[c] += ui[c];
        for (std::size_t j = i + 1; j < run_rows.size(); ++j)
          spread = std::max(spread,
                            angular_distance_deg(run_rows[i]->doa(),
                                                 run_rows[j]->doa()));
      }
      d.is_static = spread <= opts.static_tolerance_deg;
      const Doa mean_doa = unit_to_doa(mean);
      d.azimuth_deg = mean_doa.azimuth_deg;
      d.elevation_deg = mean_doa.elevation_deg;
      out.push_back(d);
      run_start = -1;
      run_overlap = false;
      run_rows.clear();
    };

    long prev_frame = -2;
    for (long f = 0; f < total; ++f) {
      const AnnotationRow* mine = nullptr;
      bool others = false;
      for (const AnnotationRow* r : by_frame[f]) {
        if (r->class_id == key.class_id && r->track_id == key.track_id)
          mine = r;
        else
          others = true;
      }
      if (!mine) {
        flush(prev_frame + 1);
        continue;
      }
      const bool contiguous = (f == prev_frame + 1) && run_start >= 0;
      if (!contiguous || others != run_overlap) {
        flush(prev_frame + 1);
        run_start = f;
        run_overlap = others;
      }
      run_rows.push_back(mine);
      prev_frame = f;
    }
    flush(prev_frame + 1);
  }

  std::sort(out.begin(), out.end(),
            [](const SegmentDescriptor& a, const SegmentDescriptor& b) {
              if (a.start_frame != b.start_frame)
                return a.start_frame < b.start_frame;
              if (a.class_id != b.class_id) return a.class_id < b.class_id;
              return a.track_id < b.track_id;
            });
  return out;
}

SegmentData slice_segment(const MultichannelClip& clip,
                          const EventAnnotationList& ann,
                          const SegmentDescriptor& d) {
  SegmentData s;
  s.descriptor = d;
  const long spf = clip.sample_rate / kLabelFramesPerSecond;
  const std::size_t begin =
      std::min<std::size_t>(d.start_frame * spf, clip.num_samples());
  const std::size_t end =
      std::min<std::size_t>(d.end_frame * spf, clip.num_samples());
  s.clip = make_clip(int(clip.num_channels()), end - begin, clip.sample_rate,
                     clip.format);
  for (std::size_t ch = 0; ch < clip.num_channels(); ++ch)
    std::copy(clip.channels[ch].begin() + begin,
              clip.channels[ch].begin() + end, s.clip.channels[ch].begin());

  for (const AnnotationRow& r : ann.rows) {
    if (r.class_id != d.class_id || r.track_id != d.track_id) continue;
    if (r.frame < d.start_frame || r.frame >= d.end_frame) continue;
    AnnotationRow moved = r;
    moved.frame -= d.start_frame;
    s.ann.rows.push_back(moved);
  }
  s.ann.sort_canonical();
  return s;
}

void write_inventory(const std::vector<SegmentDescriptor>& segments,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw UnsupportedFormat("cannot write inventory file " + path.string());
  for (const SegmentDescriptor& d : segments) {
    nlohmann::json j{{"file_id", d.file_id},
                     {"start_frame", d.start_frame},
                     {"end_frame", d.end_frame},
                     {"class_id", d.class_id},
                     {"track_id", d.track_id},
                     {"azimuth", d.azimuth_deg},
                     {"elevation", d.elevation_deg},
                     {"static", d.is_static},
                     {"overlapping", d.overlapping}};
    out << j.dump() << '\n';
  }
}

std::vector<SegmentDescriptor> read_inventory(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw UnsupportedFormat("cannot open inventory file " + path.string());
  std::vector<SegmentDescriptor> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw MalformedRow(path.string() + ":" + std::to_string(line_no) +
                         ": bad inventory line");
    SegmentDescriptor d;
    d.file_id = j.at("file_id").get<std::string>();
    d.start_frame = j.at("start_frame").get<long>();
    d.end_frame = j.at("end_frame").get<long>();
    d.class_id = j.at("class_id").get<int>();
    d.track_id = j.at("track_id").get<int>();
    d.azimuth_deg = j.at("azimuth").get<double>();
    d.elevation_deg = j.at("elevation").get<double>();
    d.is_static = j.at("static").get<bool>();
    d.overlapping = j.at("overlapping").get<bool>();
    out.push_back(d);
  }
  return out;
}

}  // namespace seld
