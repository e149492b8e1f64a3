#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cb/core.hpp"

// MovieLens-100K ingestion: parse the published u.user / u.item / u.data
// layouts, join them, and explode each rating into one record per genre of
// the rated movie, with the genre as the bandit arm.
namespace cb::ml100k {

// Genre flag order of u.item.
inline constexpr std::array<const char*, 19> kGenres = {
    "unknown",  "Action",    "Adventure", "Animation", "Children's", "Comedy", "Crime",
    "Documentary", "Drama",  "Fantasy",   "Film-Noir", "Horror",     "Musical", "Mystery",
    "Romance",  "Sci-Fi",    "Thriller",  "War",       "Western"};

struct UserRecord {
    int user_id = 0;
    int age = 0;
    std::string sex;  // "F" or "M"
    std::string occupation;
    std::string zip_code;  // kept as a string; real data contains values like T8H1N
};

struct MovieRecord {
    int movie_id = 0;
    std::string title;
    std::array<std::uint8_t, 19> genre_flags = {};
};

struct RatingEvent {
    int user_id = 0;
    int movie_id = 0;
    int rating = 0;  // 1..5
    std::int64_t unix_timestamp = 0;
};

namespace detail_ml {

inline std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return out;
}

// Replace bytes that do not form valid UTF-8 sequences with '?'.
inline std::string scrub_utf8(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        if (b < 0x80)
            len = 1;
        else if ((b & 0xE0) == 0xC0)
            len = 2;
        else if ((b & 0xF0) == 0xE0)
            len = 3;
        else if ((b & 0xF8) == 0xF0)
            len = 4;
        if (len == 0 || i + len > s.size()) {
            out += '?';
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t j = 1; j < len; ++j)
            ok &= (static_cast<unsigned char>(s[i + j]) & 0xC0) == 0x80;
        if (!ok) {
            out += '?';
            ++i;
            continue;
        }
        out.append(s, i, len);
        i += len;
    }
    return out;
}

inline int parse_int_field(const std::string& field, const char* what, std::size_t line_no) {
    std::int64_t v = 0;
    if (!cb::detail::parse_int(field, v))
        throw parse_error(std::string(what) + " must be an integer, got '" + field + "'",
                          line_no);
    return static_cast<int>(v);
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (!line.empty()) fn(std::string(line), line_no);
        start = end + 1;
    }
}

}  // namespace detail_ml

// u.user: pipe-delimited `id|age|gender|occupation|zip`.
inline std::vector<UserRecord> parse_users(const std::filesystem::path& path) {
    std::vector<UserRecord> users;
    detail_ml::for_each_line(detail_ml::read_all(path), [&](const std::string& line,
                                                            std::size_t line_no) {
        const auto fields = detail::split(line, '|');
        if (fields.size() != 5)
            throw parse_error("expected 5 '|' fields, got " + std::to_string(fields.size()),
                              line_no);
        UserRecord u;
        u.user_id = detail_ml::parse_int_field(fields[0], "user id", line_no);
        u.age = detail_ml::parse_int_field(fields[1], "age", line_no);
        if (u.age <= 0) throw parse_error("age must be positive", line_no);
        u.sex = fields[2];
        u.occupation = fields[3];
        u.zip_code = fields[4];
        users.push_back(std::move(u));
    });
    return users;
}

// u.item: pipe-delimited, 24 fields, the final 19 being genre flags. Bad
// bytes in titles are replaced, not fatal.
inline std::vector<MovieRecord> parse_items(const std::filesystem::path& path) {
    std::vector<MovieRecord> movies;
    detail_ml::for_each_line(detail_ml::read_all(path), [&](const std::string& line,
                                                            std::size_t line_no) {
        const auto fields = detail::split(line, '|');
        if (fields.size() != 24)
            throw parse_error("expected 24 '|' fields, got " + std::to_string(fields.size()),
                              line_no);
        MovieRecord m;
        m.movie_id = detail_ml::parse_int_field(fields[0], "movie id", line_no);
        m.title = detail_ml::scrub_utf8(fields[1]);
        for (std::size_t g = 0; g < 19; ++g) {
            const std::string& f = fields[5 + g];
            if (f != "0" && f != "1")
                throw parse_error("genre flag must be 0 or 1, got '" + f + "'", line_no);
            m.genre_flags[g] = f == "1" ? 1 : 0;
        }
        movies.push_back(std::move(m));
    });
    return movies;
}

// u.data: tab-delimited `user  item  rating  timestamp`.
inline std::vector<RatingEvent> parse_ratings(const std::filesystem::path& path) {
    std::vector<RatingEvent> ratings;
    detail_ml::for_each_line(detail_ml::read_all(path), [&](const std::string& line,
                                                            std::size_t line_no) {
        const auto fields = detail::split(line, '\t');
        if (fields.size() != 4)
            throw parse_error("expected 4 tab fields, got " + std::to_string(fields.size()),
                              line_no);
        RatingEvent r;
        r.user_id = detail_ml::parse_int_field(fields[0], "user id", line_no);
        r.movie_id = detail_ml::parse_int_field(fields[1], "movie id", line_no);
        r.rating = detail_ml::parse_int_field(fields[2], "rating", line_no);
        if (r.rating < 1 || r.rating > 5)
            throw parse_error("rating must be in 1..5, got " + std::to_string(r.rating),
                              line_no);
        std::int64_t ts = 0;
        if (!detail::parse_int(fields[3], ts))
            throw parse_error("timestamp must be an integer", line_no);
        r.unix_timestamp = ts;
        ratings.push_back(r);
    });
    return ratings;
}

inline std::string to_line(const UserRecord& u) {
    return std::to_string(u.user_id) + "|" + std::to_string(u.age) + "|" + u.sex + "|" +
           u.occupation + "|" + u.zip_code;
}

inline std::string to_line(const RatingEvent& r) {
    return std::to_string(r.user_id) + "\t" + std::to_string(r.movie_id) + "\t" +
           std::to_string(r.rating) + "\t" + std::to_string(r.unix_timestamp);
}

struct JoinedRow {
    int movie_id = 0;
    int user_id = 0;
    int rating = 0;
    std::int64_t unix_timestamp = 0;
    int age = 0;
    int sex_code = 0;         // index into JoinedTable::sex_values
    int occupation_code = 0;  // index into occupation_values
    int zip_code = 0;         // index into zip_values
    std::array<std::uint8_t, 19> genre_flags = {};
};

struct JoinedTable {
    std::vector<JoinedRow> rows;  // sorted by timestamp, ties by (user_id, movie_id)
    std::vector<std::string> sex_values;         // sorted distinct, from u.user
    std::vector<std::string> occupation_values;  // sorted distinct
    std::vector<std::string> zip_values;         // sorted distinct
    std::size_t dropped = 0;  // ratings referencing an unknown user or movie
};

// Inner join ratings x users x movies. Categorical fields are encoded as
// indices over sorted distinct values; dangling ratings are dropped and
// counted. Output order is the stream order: timestamp ascending, ties by
// (user_id, movie_id).
inline JoinedTable join_and_engineer(const std::vector<UserRecord>& users,
                                     const std::vector<MovieRecord>& movies,
                                     const std::vector<RatingEvent>& ratings) {
    JoinedTable table;

    std::unordered_map<int, const UserRecord*> user_by_id;
    for (const UserRecord& u : users)
        if (!user_by_id.emplace(u.user_id, &u).second)
            throw schema_error("duplicate user id " + std::to_string(u.user_id));
    std::unordered_map<int, const MovieRecord*> movie_by_id;
    for (const MovieRecord& m : movies)
        if (!movie_by_id.emplace(m.movie_id, &m).second)
            throw schema_error("duplicate movie id " + std::to_string(m.movie_id));

    std::set<std::string> sexes, occupations, zips;
    for (const UserRecord& u : users) {
        sexes.insert(u.sex);
        occupations.insert(u.occupation);
        zips.insert(u.zip_code);
    }
    table.sex_values.assign(sexes.begin(), sexes.end());
    table.occupation_values.assign(occupations.begin(), occupations.end());
    table.zip_values.assign(zips.begin(), zips.end());

    const auto code_of = [](const std::vector<std::string>& values, const std::string& v) {
        return static_cast<int>(std::lower_bound(values.begin(), values.end(), v) -
                                values.begin());
    };

    for (const RatingEvent& r : ratings) {
        const auto user_it = user_by_id.find(r.user_id);
        const auto movie_it = movie_by_id.find(r.movie_id);
        if (user_it == user_by_id.end() || movie_it == movie_by_id.end()) {
            ++table.dropped;
            continue;
        }
        const UserRecord& u = *user_it->second;
        JoinedRow row;
        row.movie_id = r.movie_id;
        row.user_id = r.user_id;
        row.rating = r.rating;
        row.unix_timestamp = r.unix_timestamp;
        row.age = u.age;
        row.sex_code = code_of(table.sex_values, u.sex);
        row.occupation_code = code_of(table.occupation_values, u.occupation);
        row.zip_code = code_of(table.zip_values, u.zip_code);
        row.genre_flags = movie_it->second->genre_flags;
        table.rows.push_back(row);
    }

    std::sort(table.rows.begin(), table.rows.end(), [](const JoinedRow& a, const JoinedRow& b) {
        if (a.unix_timestamp != b.unix_timestamp) return a.unix_timestamp < b.unix_timestamp;
        if (a.user_id != b.user_id) return a.user_id < b.user_id;
        if (a.movie_id != b.movie_id) return a.movie_id < b.movie_id;
        return a.rating < b.rating;
    });
    return table;
}

// Which user fields form the context vector. The default follows the
// dataset's (age, sex, zip) description; occupation is parsed and kept but
// excluded unless asked for.
struct ContextFields {
    bool age = true;
    bool sex = true;
    bool zip = true;
    bool occupation = false;
};

inline ContextSchema make_schema(const JoinedTable& table, ContextFields fields = {}) {
    if (!fields.age && !fields.sex && !fields.zip && !fields.occupation)
        throw config_error("at least one context field must be selected");
    std::vector<FeatureSpec> features;
    if (fields.age) features.push_back(FeatureSpec::numeric("age", 0.0, 100.0));
    if (fields.sex) features.push_back(FeatureSpec::categorical("sex", table.sex_values));
    if (fields.zip) features.push_back(FeatureSpec::categorical("zip", table.zip_values));
    if (fields.occupation)
        features.push_back(FeatureSpec::categorical("occupation", table.occupation_values));
    return ContextSchema(std::move(features));
}

// One record per set genre flag, the genre as the arm and the rating shared
// across them; genres emit in flag order within a row, rows keep the table's
// stream order. A row with no flags set falls back to the `unknown` arm.
inline std::vector<InteractionRecord> explode_by_genre(const JoinedTable& table,
                                                       ContextFields fields = {}) {
    std::vector<InteractionRecord> records;
    std::unordered_map<std::string, std::size_t> arm_index;
    std::int64_t position = 0;

    const auto emit = [&](const JoinedRow& row, std::size_t genre) {
        const std::string label = kGenres[genre];
        const auto [it, inserted] = arm_index.emplace(label, arm_index.size());
        InteractionRecord rec;
        rec.position = ++position;
        if (fields.age) rec.raw_context.emplace_back(static_cast<double>(row.age));
        if (fields.sex)
            rec.raw_context.emplace_back(table.sex_values[static_cast<std::size_t>(row.sex_code)]);
        if (fields.zip)
            rec.raw_context.emplace_back(table.zip_values[static_cast<std::size_t>(row.zip_code)]);
        if (fields.occupation)
            rec.raw_context.emplace_back(
                table.occupation_values[static_cast<std::size_t>(row.occupation_code)]);
        rec.arm = ArmId{label, it->second};
        rec.reward = static_cast<double>(row.rating);
        records.push_back(std::move(rec));
    };

    for (const JoinedRow& row : table.rows) {
        bool any = false;
        for (std::size_t g = 0; g < 19; ++g) {
            if (row.genre_flags[g]) {
                emit(row, g);
                any = true;
            }
        }
        if (!any) emit(row, 0);  // `unknown` is flag 0
    }
    return records;
}

// Inspection export of the exploded stream: `age,sex,zip,genre,rating`.
inline void write_inspection_csv(const JoinedTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out << "age,sex,zip,genre,rating\n";
    for (const JoinedRow& row : table.rows) {
        bool any = false;
        const auto line = [&](std::size_t g) {
            out << row.age << ',' << table.sex_values[static_cast<std::size_t>(row.sex_code)]
                << ',' << table.zip_values[static_cast<std::size_t>(row.zip_code)] << ','
                << kGenres[g] << ',' << row.rating << '\n';
        };
        for (std::size_t g = 0; g < 19; ++g)
            if (row.genre_flags[g]) {
                line(g);
                any = true;
            }
        if (!any) line(0);
    }
    if (!out) throw io_error("write failed for '" + path.string() + "'");
}

}  // namespace cb::ml100k
