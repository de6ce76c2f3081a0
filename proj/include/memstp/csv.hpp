#pragma once

// Plot-ready CSV output with 9 significant digits, and a small reader for
// files written this way (or any comma-separated file with a header row).

#include <charconv>
#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <memstp/device.hpp>
#include <memstp/protocols.hpp>

namespace memstp::csv {

struct io_error : std::runtime_error {
	using std::runtime_error::runtime_error;
};

inline std::string format_number(double x)
{
	if (std::isnan(x)) return "nan";
	if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
	char buf[64];
	auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 9);
	return std::string(buf, r.ptr);
}

using Cell = std::variant<double, long long, std::string>;

inline std::string format_cell(const Cell &c)
{
	if (const auto *d = std::get_if<double>(&c)) return format_number(*d);
	if (const auto *i = std::get_if<long long>(&c)) return std::to_string(*i);
	return std::get<std::string>(c);
}

struct Table {
	std::vector<std::string> header;
	std::vector<std::vector<Cell>> rows;

	void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

inline std::string to_string(const Table &t)
{
	std::string out;
	auto line = [&out](const auto &cells, auto fmt) {
		for (std::size_t k = 0; k < cells.size(); ++k) {
			if (k) out += ',';
			out += fmt(cells[k]);
		}
		out += '\n';
	};
	line(t.header, [](const std::string &s) { return s; });
	for (const auto &r : t.rows) {
		if (r.size() != t.header.size()) throw std::logic_error("csv: row width does not match header");
		line(r, format_cell);
	}
	return out;
}

inline void write_file(const std::string &path, std::string_view text)
{
	std::ofstream f(path, std::ios::binary | std::ios::trunc);
	if (!f) throw io_error("cannot open '" + path + "' for writing");
	f.write(text.data(), static_cast<std::streamsize>(text.size()));
	if (!f) throw io_error("write to '" + path + "' failed");
}

inline void emit(const Table &t, const std::string &path) { write_file(path, to_string(t)); }

// Two-column trace; value_column names the quantity, e.g. conductance_S.
inline Table trace_table(std::span<const double> t, std::span<const double> value, const std::string &value_column)
{
	if (t.size() != value.size()) throw std::logic_error("csv: trace columns differ in length");
	Table tab{{"time_s", value_column}, {}};
	tab.rows.reserve(t.size());
	for (std::size_t k = 0; k < t.size(); ++k) tab.add({t[k], value[k]});
	return tab;
}

inline Table trace_table(std::span<const protocols::TraceSample> s, const std::string &value_column = "conductance_S")
{
	Table tab{{"time_s", value_column}, {}};
	for (const auto &x : s) tab.add({x.t, x.g});
	return tab;
}

// index, g0_S, g_post_S, label, peak_1..peak_n with n taken from the longest record.
inline Table records_table(std::span<const protocols::EventRecord> recs)
{
	std::size_t n = 0;
	for (const auto &r : recs) n = std::max(n, r.peaks.size());
	Table tab{{"index", "g0_S", "g_post_S", "label"}, {}};
	for (std::size_t k = 0; k < n; ++k) tab.header.push_back("peak_" + std::to_string(k + 1));
	for (const auto &r : recs) {
		std::vector<Cell> row{static_cast<long long>(r.index), r.g0, r.g_post, std::string(device::to_string(r.label))};
		for (std::size_t k = 0; k < n; ++k) row.emplace_back(k < r.peaks.size() ? r.peaks[k] : std::nan(""));
		tab.add(std::move(row));
	}
	return tab;
}

struct Document {
	std::vector<std::string> header;
	std::vector<std::vector<std::string>> rows;

	std::size_t column_index(std::string_view name) const
	{
		for (std::size_t k = 0; k < header.size(); ++k)
			if (header[k] == name) return k;
		throw io_error("csv: no column '" + std::string(name) + "'");
	}

	std::vector<double> numbers(std::string_view name) const
	{
		const auto c = column_index(name);
		std::vector<double> out;
		out.reserve(rows.size());
		for (std::size_t r = 0; r < rows.size(); ++r) {
			const std::string &s = rows[r][c];
			double v = 0.0;
			auto res = std::from_chars(s.data(), s.data() + s.size(), v);
			if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
				if (s == "nan") v = std::nan("");
				else throw io_error("csv: row " + std::to_string(r + 2) + ", column '" + std::string(name) +
				                    "': not a number: '" + s + "'");
			}
			out.push_back(v);
		}
		return out;
	}
};

inline Document parse(std::string_view text)
{
	Document doc;
	std::size_t line_no = 0;
	auto split = [](std::string_view line) {
		std::vector<std::string> cells;
		std::size_t start = 0;
		while (true) {
			const auto p = line.find(',', start);
			std::string cell(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
			while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
			while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
			cells.push_back(std::move(cell));
			if (p == std::string_view::npos) break;
			start = p + 1;
		}
		return cells;
	};
	std::size_t pos = 0;
	while (pos < text.size()) {
		auto end = text.find('\n', pos);
		if (end == std::string_view::npos) end = text.size();
		std::string_view line = text.substr(pos, end - pos);
		pos = end + 1;
		++line_no;
		if (line.empty() || line == "\r" || line.front() == '#') continue;
		auto cells = split(line);
		if (doc.header.empty()) {
			doc.header = std::move(cells);
			continue;
		}
		if (cells.size() != doc.header.size())
			throw io_error("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
			               " fields, header has " + std::to_string(doc.header.size()));
		doc.rows.push_back(std::move(cells));
	}
	if (doc.header.empty()) throw io_error("csv: no header row");
	return doc;
}

inline std::string read_file(const std::string &path)
{
	std::ifstream f(path, std::ios::binary);
	if (!f) throw io_error("cannot open '" + path + "' for reading");
	std::ostringstream ss;
	ss << f.rdbuf();
	return ss.str();
}

inline Document read(const std::string &path)
{
	const std::string text = read_file(path);
	try {
		return parse(text);
	} catch (const io_error &e) {
		throw io_error(path + ": " + e.what());
	}
}

} // namespace memstp::csv
