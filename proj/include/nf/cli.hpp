#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nf/instantiate.hpp"
#include "nf/json_io.hpp"

namespace nf {

// exit codes: 0 ok, 1 validation failure, 2 ambiguous unification, 3 I/O
enum ExitCode { kOk = 0, kValidationFailure = 1, kAmbiguous = 2, kIoFailure = 3 };

namespace cli_detail {

/// Advisory lock guarding a model file against concurrent writers.
class FileLock {
public:
    explicit FileLock(const std::string& model_path) : path_(model_path + ".lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw IoError("cannot create lock file " + path_);
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            fd_ = -1;
            throw IoError("model file is locked by another writer: " + path_);
        }
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    std::string path_;
    int fd_ = -1;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Write-new-then-rename so an interrupted command leaves the old file intact.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp);
        out << content;
        if (!out.flush()) throw IoError("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot replace " + path);
    }
}

inline Json parse_file(const std::string& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError("malformed JSON in " + path + ": " + e.what());
    }
}

inline Model load_model_file(const std::string& path, bool allow_missing) {
    if (allow_missing && !std::filesystem::exists(path)) return empty_model();
    return load_model(parse_file(path));
}

/// Resolves an agent given either its pre-model node id or a unique label.
inline NodeId resolve_agent(const Model& model, const std::string& token) {
    const TypedGraph& pm = model.premodel;
    if (pm.graph->has_node(token) && pm.is_kind(token, MetaKind::Agent)) return token;
    std::vector<NodeId> matches;
    for (const auto& n : pm.graph->nodes()) {
        if (!pm.is_kind(n, MetaKind::Agent)) continue;
        auto label = pm.graph->label_of(n);
        if (label && *label == token) matches.push_back(n);
    }
    if (matches.size() == 1) return matches.front();
    if (matches.empty()) throw std::invalid_argument("selection: unknown agent " + token);
    throw std::invalid_argument("selection: label " + token + " is ambiguous");
}

inline std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline void print_site_table(std::ostream& out, const Model& model, const SiteMap& sites) {
    out << "sites:\n";
    for (const auto& [agent, order] : sites.per_agent) {
        for (std::size_t idx : order) {
            const Site& site = sites.at(idx);
            out << "  " << model.premodel.graph->display(agent) << "\t" << site.name << "\t";
            switch (site.origin) {
                case SiteOrigin::Binding: out << "binding\t" << site.anchor; break;
                case SiteOrigin::Residue: out << "residue\t" << site.anchor; break;
                case SiteOrigin::Flag: out << "flag\t" << site.anchor; break;
            }
            if (!site.states.empty()) {
                out << "\tstates ";
                for (std::size_t i = 0; i < site.states.size(); ++i)
                    out << (i ? "," : "") << site.states[i];
                out << " default " << site.default_state;
            }
            out << "\n";
        }
    }
}

inline void print_conflict_table(std::ostream& out, const Model& model, const SiteMap& sites,
                                 const ConflictRelation& conflicts) {
    out << "conflicts:\n";
    for (const auto& group : conflicts.intrinsic) {
        out << "  intrinsic " << group.action << "/" << group.source << ":";
        for (const auto& p : group.participants) out << " " << model.premodel.graph->display(p);
        out << "\n";
    }
    for (const auto& [a, b] : conflicts.extrinsic)
        out << "  extrinsic " << model.premodel.graph->display(sites.at(a).agent) << ": "
            << sites.at(a).name << " -- " << sites.at(b).name << "\n";
    if (conflicts.intrinsic.empty() && conflicts.extrinsic.empty()) out << "  none\n";
}

inline int run_validate(const std::string& path, std::ostream& out, std::ostream& err) {
    Json doc = parse_file(path);
    if (doc.is_object() && doc.contains("nuggets")) {
        try {
            load_model(doc);
        } catch (const IoError& e) {
            err << e.what() << "\n";
            return kValidationFailure;
        }
        out << "model ok: " << path << "\n";
        return kOk;
    }
    if (doc.is_object() && doc.contains("typing")) {
        TypedGraph tg = typed_graph_from_json(doc);
        NuggetReport report = check_nugget(tg);
        if (!report.ok()) {
            err << report.report.to_string();
            return kValidationFailure;
        }
        out << "nugget ok: principal action " << *report.principal_action << "\n";
        return kOk;
    }
    StructuredGraph g = graph_from_json(doc);
    Report report = validate_graph(g);
    if (!report.ok()) {
        err << report.to_string();
        return kValidationFailure;
    }
    out << "graph ok: " << g.nodes().size() << " nodes\n";
    return kOk;
}

} // namespace cli_detail

/// Command-line front door. Arguments exclude the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"nugget-forge: curate protein-interaction nuggets and compile them to Kappa"};
    app.require_subcommand(1);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a graph, nugget or model file");
    validate->add_option("path", validate_path, "file to check")->required();

    std::string model_path, nugget_path, seeds_path;
    auto* add = app.add_subcommand("add", "add a nugget to a model");
    add->add_option("--model", model_path, "model file (created when missing)")->required();
    add->add_option("--nugget", nugget_path, "nugget file")->required();
    add->add_option("--seeds", seeds_path, "seed identifications file");

    std::string agg_model, agg_nugget, agg_seeds, agg_deprecate;
    int agg_target = 0;
    auto* aggregate = app.add_subcommand("aggregate", "update a stored nugget with new information");
    aggregate->add_option("--model", agg_model, "model file")->required();
    aggregate->add_option("--target", agg_target, "id of the nugget to update")->required();
    aggregate->add_option("--nugget", agg_nugget, "incoming nugget file")->required();
    aggregate->add_option("--seeds", agg_seeds, "seed identifications file");
    aggregate->add_option("--deprecate", agg_deprecate, "deprecation file");

    std::string ins_model, ins_agents, ins_wildtype, ins_out;
    bool merge_cliques = false;
    auto* instantiate_cmd = app.add_subcommand("instantiate", "compile a protein selection to Kappa");
    instantiate_cmd->add_option("--model", ins_model, "model file")->required();
    instantiate_cmd->add_option("--agents", ins_agents, "comma-separated agent ids or labels")
        ->required();
    instantiate_cmd->add_option("--wildtype", ins_wildtype, "wild-type designation file");
    instantiate_cmd->add_option("--out", ins_out, "output Kappa file")->required();
    instantiate_cmd->add_flag("--merge-cliques", merge_cliques, "conflate conflict cliques");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*validate) return cli_detail::run_validate(validate_path, out, err);

        if (*add) {
            cli_detail::FileLock lock(model_path);
            Model model = cli_detail::load_model_file(model_path, true);
            TypedGraph nugget = typed_graph_from_json(cli_detail::parse_file(nugget_path));
            GlueingChoice glue;
            if (!seeds_path.empty()) glue = seeds_from_json(cli_detail::parse_file(seeds_path));
            AddResult result = add_nugget(model, nugget, glue);
            cli_detail::write_file_atomic(model_path, save_model(result.model));
            out << "added nugget " << result.id << "; pre-model +" << result.premodel_nodes_added
                << " nodes (" << result.model.premodel.graph->nodes().size() << " total)\n";
            return kOk;
        }

        if (*aggregate) {
            cli_detail::FileLock lock(agg_model);
            Model model = cli_detail::load_model_file(agg_model, false);
            TypedGraph nugget = typed_graph_from_json(cli_detail::parse_file(agg_nugget));
            GlueingChoice glue;
            if (!agg_seeds.empty()) glue = seeds_from_json(cli_detail::parse_file(agg_seeds));
            DeprecationSpec deprecate;
            if (!agg_deprecate.empty())
                deprecate = deprecation_from_json(cli_detail::parse_file(agg_deprecate));
            UpdateResult result = update_nugget(model, agg_target, nugget, glue, deprecate);
            cli_detail::write_file_atomic(agg_model, save_model(result.model));
            out << "updated nugget " << agg_target << "; +" << result.trace.added_nodes.size()
                << " nodes, -" << result.trace.deleted_nodes.size() << " nodes, +"
                << result.trace.added_s_edges.size() + result.trace.added_e_edges.size()
                << " edges, -"
                << result.trace.deleted_s_edges.size() + result.trace.deleted_e_edges.size()
                << " edges";
            if (!result.premodel_nodes_removed.empty()) {
                out << "; pre-model dropped";
                for (const auto& n : result.premodel_nodes_removed) out << " " << n;
            }
            out << "\n";
            return kOk;
        }

        if (*instantiate_cmd) {
            Model model = cli_detail::load_model_file(ins_model, false);
            ProteinSelection sel;
            for (const auto& token : cli_detail::split_csv(ins_agents))
                sel.agents.insert(cli_detail::resolve_agent(model, token));
            if (!ins_wildtype.empty())
                sel.wildtype = wildtype_from_json(cli_detail::parse_file(ins_wildtype));
            InstantiationOptions options;
            options.merge_cliques = merge_cliques;
            InstantiationResult result = instantiate(model, sel, options);
            cli_detail::write_file_atomic(ins_out, result.kappa.text);
            out << "instantiated " << result.applicable.size() << " nuggets over " << sel.agents.size()
                << " agents -> " << ins_out << "\n";
            cli_detail::print_site_table(out, model, result.sites);
            cli_detail::print_conflict_table(out, model, result.sites, result.conflicts);
            return kOk;
        }
    } catch (const AmbiguousUnificationError& e) {
        err << e.what() << "\n";
        int i = 1;
        for (const auto& candidate : e.candidates) {
            err << "  extension " << i++ << ":";
            for (const auto& [a, b] : candidate) err << " " << a << "=" << b;
            err << "\n";
        }
        return kAmbiguous;
    } catch (const IoError& e) {
        err << e.what() << "\n";
        return kIoFailure;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kValidationFailure;
    } catch (const std::out_of_range& e) {
        err << e.what() << "\n";
        return kValidationFailure;
    }
    return kOk;
}

} // namespace nf
