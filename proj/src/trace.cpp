#include "hlcmon/trace.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace hlcmon
{
    using nlohmann::ordered_json;

    std::string_view to_string(EventKind k) noexcept
    {
        switch (k)
        {
        case EventKind::Local:
            return "local";
        case EventKind::Send:
            return "send";
        case EventKind::Recv:
            return "recv";
        }
        return "local";
    }

    namespace
    {
        constexpr std::string_view kFormatName = "hlcmon-trace";

        ordered_json event_to_json(const Event &e)
        {
            ordered_json j;
            j["seq"] = e.seq;
            j["proc"] = e.proc;
            j["kind"] = to_string(e.kind);
            j["pt"] = e.pt;
            j["l"] = e.hlc.l;
            j["c"] = e.hlc.c;
            if (e.var_change)
            {
                j["var"] = e.var_change->name;
                j["val"] = e.var_change->value;
            }
            else
            {
                j["var"] = nullptr;
                j["val"] = nullptr;
            }
            if (e.msg_id)
                j["msg_id"] = *e.msg_id;
            else
                j["msg_id"] = nullptr;
            return j;
        }

        template <typename T>
        T get_field(const ordered_json &j, const char *key, std::size_t line)
        {
            auto it = j.find(key);
            if (it == j.end())
                throw TraceFormatError(line, std::string("missing field '") + key + "'");
            try
            {
                return it->get<T>();
            }
            catch (const nlohmann::json::exception &)
            {
                throw TraceFormatError(line, std::string("bad value for field '") + key + "'");
            }
        }

        EventKind parse_kind(const std::string &s, std::size_t line)
        {
            if (s == "local")
                return EventKind::Local;
            if (s == "send")
                return EventKind::Send;
            if (s == "recv")
                return EventKind::Recv;
            throw TraceFormatError(line, "unknown event kind '" + s + "'");
        }

        Event event_from_json(const ordered_json &j, std::size_t line)
        {
            if (!j.is_object())
                throw TraceFormatError(line, "expected a JSON object");
            Event e;
            e.seq = get_field<std::uint64_t>(j, "seq", line);
            e.proc = get_field<ProcessId>(j, "proc", line);
            e.kind = parse_kind(get_field<std::string>(j, "kind", line), line);
            e.pt = get_field<ClockValue>(j, "pt", line);
            e.hlc.l = get_field<ClockValue>(j, "l", line);
            e.hlc.c = get_field<Counter>(j, "c", line);
            auto var = j.find("var");
            if (var != j.end() && !var->is_null())
                e.var_change = VarChange{get_field<std::string>(j, "var", line), get_field<Value>(j, "val", line)};
            auto mid = j.find("msg_id");
            if (mid != j.end() && !mid->is_null())
                e.msg_id = get_field<MessageId>(j, "msg_id", line);
            if (e.kind != EventKind::Local && !e.msg_id)
                throw TraceFormatError(line, "send/recv event without msg_id");
            return e;
        }
    } // namespace

    void encode(const Trace &trace, std::ostream &out)
    {
        ordered_json h;
        h["format"] = kFormatName;
        h["version"] = trace.header.version;
        h["n"] = trace.header.n;
        h["epsilon"] = trace.header.epsilon;
        h["c_max"] = trace.header.c_max;
        h["config"] = trace.header.config;
        out << h.dump() << '\n';
        for (const auto &e : trace.events)
            out << event_to_json(e).dump() << '\n';
    }

    std::string encode(const Trace &trace)
    {
        std::ostringstream os;
        encode(trace, os);
        return os.str();
    }

    Trace decode(std::istream &in)
    {
        Trace trace;
        std::string text;
        std::size_t line_no = 0;
        bool have_header = false;
        std::vector<std::optional<std::uint64_t>> last_seq;
        std::unordered_map<MessageId, bool> sends; // msg_id -> already received

        while (std::getline(in, text))
        {
            ++line_no;
            if (text.empty())
                continue;
            ordered_json j;
            try
            {
                j = ordered_json::parse(text);
            }
            catch (const nlohmann::json::parse_error &ex)
            {
                throw TraceFormatError(line_no, std::string("malformed JSON: ") + ex.what());
            }

            if (!have_header)
            {
                if (!j.is_object() || j.value("format", std::string{}) != kFormatName)
                    throw TraceFormatError(line_no, "missing trace header");
                trace.header.version = get_field<int>(j, "version", line_no);
                if (trace.header.version != kTraceFormatVersion)
                    throw TraceFormatError(line_no, "unsupported format version " + std::to_string(trace.header.version));
                trace.header.n = get_field<std::uint32_t>(j, "n", line_no);
                trace.header.epsilon = get_field<ClockValue>(j, "epsilon", line_no);
                trace.header.c_max = get_field<Counter>(j, "c_max", line_no);
                if (auto cfg = j.find("config"); cfg != j.end())
                    trace.header.config = *cfg;
                last_seq.assign(trace.header.n, std::nullopt);
                have_header = true;
                continue;
            }

            Event e = event_from_json(j, line_no);
            if (e.proc >= trace.header.n)
                throw TraceFormatError(line_no, "process " + std::to_string(e.proc) + " out of range");
            auto &prev = last_seq[e.proc];
            if (prev && e.seq <= *prev)
                throw TraceFormatError(line_no, "seq regression on process " + std::to_string(e.proc));
            prev = e.seq;

            if (e.kind == EventKind::Send)
            {
                if (!sends.emplace(*e.msg_id, false).second)
                    throw TraceFormatError(line_no, "duplicate send msg_id " + std::to_string(*e.msg_id));
            }
            else if (e.kind == EventKind::Recv)
            {
                auto it = sends.find(*e.msg_id);
                if (it == sends.end() || it->second)
                    throw TraceFormatError(line_no, "unmatched msg_id " + std::to_string(*e.msg_id));
                it->second = true;
            }
            trace.events.push_back(std::move(e));
        }
        if (!have_header)
            throw TraceFormatError(line_no, "empty stream: missing trace header");
        return trace;
    }

    Trace decode(std::string_view text)
    {
        std::istringstream is{std::string(text)};
        return decode(is);
    }

    Trace read_trace_file(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open trace file '" + path + "'");
        return decode(in);
    }

    void write_trace_file(const Trace &trace, const std::string &path)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw Error("cannot write trace file '" + path + "'");
        encode(trace, out);
        if (!out)
            throw Error("failed writing trace file '" + path + "'");
    }

    std::vector<IntervalList> extract_intervals(const Trace &trace, std::string_view var)
    {
        std::vector<IntervalList> out(trace.header.n);
        for (std::size_t i = 0; i < trace.events.size(); ++i)
        {
            const Event &e = trace.events[i];
            if (!e.var_change || e.var_change->name != var)
                continue;
            auto &list = out.at(e.proc);
            if (!list.empty())
            {
                Interval &cur = list.back();
                if (cur.value == e.var_change->value)
                    continue;
                cur.end = e.hlc;
                cur.end_event = i;
            }
            Interval next;
            next.proc = e.proc;
            next.var = std::string(var);
            next.value = e.var_change->value;
            next.start = e.hlc;
            next.start_event = i;
            list.push_back(std::move(next));
        }
        return out;
    }

    std::vector<IntervalList> true_intervals(const std::vector<IntervalList> &all)
    {
        std::vector<IntervalList> out(all.size());
        for (std::size_t p = 0; p < all.size(); ++p)
            for (const auto &iv : all[p])
                if (iv.value != 0)
                    out[p].push_back(iv);
        return out;
    }

    void write_intervals_csv(const std::vector<IntervalList> &intervals, std::ostream &out)
    {
        out << "proc,var,val,start_l,start_c,end_l,end_c,open\n";
        for (const auto &list : intervals)
            for (const auto &iv : list)
            {
                out << iv.proc << ',' << iv.var << ',' << iv.value << ',' << iv.start.l << ',' << iv.start.c << ',';
                if (iv.end)
                    out << iv.end->l << ',' << iv.end->c << ",0\n";
                else
                    out << ",,1\n";
            }
    }

    TraceIndex::TraceIndex(const Trace &t)
        : trace(&t), by_proc(t.header.n), local_pos(t.events.size()), peer(t.events.size())
    {
        std::unordered_map<MessageId, std::size_t> send_at;
        for (std::size_t i = 0; i < t.events.size(); ++i)
        {
            const Event &e = t.events[i];
            local_pos[i] = by_proc.at(e.proc).size();
            by_proc[e.proc].push_back(i);
            if (e.kind == EventKind::Send)
                send_at.emplace(*e.msg_id, i);
            else if (e.kind == EventKind::Recv)
            {
                auto it = send_at.find(*e.msg_id);
                if (it == send_at.end())
                    throw Error("unmatched msg_id " + std::to_string(*e.msg_id));
                peer[i] = it->second;
                peer[it->second] = i;
            }
        }
    }

} // namespace hlcmon
