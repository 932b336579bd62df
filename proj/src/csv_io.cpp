#include "qbatt/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <system_error>

namespace qbatt {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if (res.ec != std::errc())
        throw NumericalCorruptionError("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw FileError("write failed: " + path);
}

}  // namespace

void emit_csv(const TrajectoryRecord& rec, const std::string& path,
              const std::string& config_echo) {
    if (rec.samples.empty())
        throw InsufficientDataError("emit_csv: empty trajectory record");
    std::string body;
    body.reserve(rec.samples.size() * 160 + config_echo.size() + 128);
    body += "# engine: ";
    body += kEngineVersion;
    body += "\n# config: ";
    body += config_echo;
    body += "\n";
    body += "t,delta_E,P,C,S,trace_err,min_eig\n";
    for (const auto& s : rec.samples) {
        body += format_double(s.t);
        body += ',';
        body += format_double(s.delta_E);
        body += ',';
        body += format_double(s.power);
        body += ',';
        body += format_double(s.coherence);
        body += ',';
        body += format_double(s.negativity);
        body += ',';
        body += format_double(s.trace_err);
        body += ',';
        body += format_double(s.min_eig);
        body += '\n';
    }
    write_file(path, body);
}

void emit_csv(const SweepTable& table, const std::string& path) {
    if (table.rows.empty())
        throw InsufficientDataError("emit_csv: empty sweep table");
    std::string body;
    body += "# engine: ";
    body += kEngineVersion;
    body += "\n# config: ";
    body += table.config_echo;
    body += "\n";
    body += table.axis + ",E_s,P_max,t_steady\n";
    for (const auto& r : table.rows) {
        body += format_double(r.axis_value);
        body += ',';
        body += format_double(r.E_s);
        body += ',';
        body += format_double(r.P_max);
        body += ',';
        body += format_double(r.t_steady);
        body += '\n';
    }
    write_file(path, body);
}

}  // namespace qbatt
