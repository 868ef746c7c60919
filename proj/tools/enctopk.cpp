/*
 * Copyright 2026 The enctopk Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// enctopk command-line tool.

#include <CLI11.hpp>

#include <iostream>

#include "enctopk/commands.hpp"
#include "enctopk/errors.hpp"

using namespace enctopk;

namespace {

void add_run_flags(CLI::App* c, RunOptions& o) {
  c->add_option("--pk", o.pk, "public key file")->required();
  c->add_option("--channel", o.channel, "inproc | tcp:HOST:PORT");
  c->add_option("--sk", o.sk, "secret key for the in-process crypto cloud");
  c->add_option("--decrypt-with", o.decrypt_with,
                "decrypt results with this secret key (inproc only)");
  c->add_option("--ehl-keys", o.ehl_keys, "EHL key file, to map results to ids");
  c->add_option("--csv", o.csv, "plaintext CSV, to map results to ids");
  c->add_option("--seed", o.seed, "S1 and in-process S2 seed");
  c->add_option("--s1-log", o.s1_log, "write S1's leakage log");
  c->add_option("--s2-log", o.s2_log, "write S2's leakage log (inproc)");
  c->add_option("--frames", o.frames, "write raw frames");
  c->add_option("--transcript", o.transcript, "write the transcript records");
  c->add_option("--result-out", o.result_out, "write the encrypted answer");
  c->add_flag("--report", o.report, "print per-depth traffic");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-k queries over an encrypted relation with two clouds"};
  app.require_subcommand(1);

  KeygenOptions kg;
  std::string kg_variant = "plus";
  auto* keygen = app.add_subcommand("keygen", "generate key material");
  keygen->add_option("--profile", kg.profile, "test | bench | paper");
  keygen->add_option("--pk", kg.pk)->required();
  keygen->add_option("--sk", kg.sk)->required();
  keygen->add_option("--ehl-keys", kg.ehl_keys)->required();
  keygen->add_option("--prp-key", kg.prp_key)->required();
  keygen->add_option("--seed", kg.seed);
  keygen->add_option("--ehl", kg_variant, "plus | classic")
      ->check(CLI::IsMember({"plus", "classic"}));
  keygen->add_option("--ehl-s", kg.ehl_s, "EHL+ residues per object");
  keygen->add_option("--list-length", kg.list_length, "classic EHL list length");

  EncryptOptions en;
  auto* encrypt = app.add_subcommand("encrypt", "encrypt a CSV relation");
  encrypt->add_option("--csv", en.csv)->required();
  encrypt->add_option("--pk", en.pk)->required();
  encrypt->add_option("--ehl-keys", en.ehl_keys)->required();
  encrypt->add_option("--prp-key", en.prp_key)->required();
  encrypt->add_option("--out", en.out)->required();
  encrypt->add_option("--sk", en.sk, "owner key, for faster encryption");
  encrypt->add_option("--join-csv", en.join_csv, "second relation of a join pair");
  encrypt->add_option("--join-out", en.join_out);
  encrypt->add_option("--width", en.width, "attribute bit width");
  encrypt->add_option("--seed", en.seed);

  TokenOptions tk;
  auto* token = app.add_subcommand("token", "mint a query or join token");
  token->add_option("--prp-key", tk.prp_key)->required();
  token->add_option("--csv", tk.csv, "CSV whose header gives the schema")->required();
  token->add_option("--out", tk.out)->required();
  token->add_option("--attrs", tk.attrs, "scoring attributes")->delimiter(',');
  token->add_option("--weights", tk.weights)->delimiter(',');
  token->add_option("-k,--k", tk.k)->required();
  token->add_option("--join-csv", tk.join_csv);
  token->add_option("--on", tk.on_left, "join attribute of the first relation");
  token->add_option("--on2", tk.on_right, "join attribute of the second relation");
  token->add_option("--score", tk.score_left, "score attribute of the first relation");
  token->add_option("--score2", tk.score_right,
                    "score attribute of the second relation");

  ServeOptions sv;
  auto* serve = app.add_subcommand("serve", "run the crypto cloud");
  serve->add_option("--sk", sv.sk)->required();
  serve->add_option("--listen", sv.listen, "HOST:PORT");
  serve->add_option("--connections", sv.connections, "exit after this many (0 = forever)");
  serve->add_option("--log", sv.log, "append leakage records here");
  serve->add_option("--seed", sv.seed);

  QueryOptions qr;
  auto* query = app.add_subcommand("query", "run a top-k query");
  add_run_flags(query, qr);
  query->add_option("--token", qr.token)->required();
  query->add_option("--er", qr.er)->required();
  query->add_option("--mode", qr.mode, "full | elim | batch:P");

  JoinOptions jn;
  auto* join = app.add_subcommand("join", "run a top-k join");
  add_run_flags(join, jn);
  join->add_option("--token", jn.token)->required();
  join->add_option("--er", jn.er1)->required();
  join->add_option("--er2", jn.er2)->required();

  DecryptOptions dc;
  auto* decrypt = app.add_subcommand("decrypt", "decrypt a result file");
  decrypt->add_option("--pk", dc.pk)->required();
  decrypt->add_option("--sk", dc.sk)->required();
  decrypt->add_option("--result", dc.result)->required();
  decrypt->add_option("--ehl-keys", dc.ehl_keys);
  decrypt->add_option("--csv", dc.csv);
  decrypt->add_flag("--join", dc.join, "the result came from a join");

  BenchOptions bn;
  auto* bench = app.add_subcommand("bench", "time a query on a synthetic relation");
  bench->add_option("--profile", bn.profile);
  bench->add_option("--rows", bn.rows);
  bench->add_option("--attrs", bn.attrs);
  bench->add_option("--lists", bn.lists);
  bench->add_option("-k,--k", bn.k);
  bench->add_option("--width", bn.width);
  bench->add_option("--mode", bn.mode);
  bench->add_option("--seed", bn.seed);

  AuditOptions au;
  auto* audit = app.add_subcommand("audit", "check leakage logs against the plaintext");
  audit->add_option("--csv", au.csv)->required();
  audit->add_option("--s1-log", au.s1_log)->required();
  audit->add_option("--s2-log", au.s2_log)->required();
  audit->add_option("--frames", au.frames);
  audit->add_option("--pk", au.pk);
  audit->add_option("--ehl-keys", au.ehl_keys);
  audit->add_option("--query", au.queries, "attr,attr:k:mode")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorClass::kUsage);
  }

  try {
    if (*keygen) {
      kg.profile = resolve_profile(kg.profile);
      kg.variant = kg_variant == "classic" ? EhlVariant::kClassic : EhlVariant::kPlus;
      cmd_keygen(kg, std::cout);
    } else if (*encrypt) {
      cmd_encrypt(en, std::cout);
    } else if (*token) {
      cmd_token(tk, std::cout);
    } else if (*serve) {
      cmd_serve(sv, std::cout);
    } else if (*query) {
      cmd_query(qr, std::cout);
    } else if (*join) {
      cmd_join(jn, std::cout);
    } else if (*decrypt) {
      cmd_decrypt(dc, std::cout);
    } else if (*bench) {
      bn.profile = resolve_profile(bn.profile);
      cmd_bench(bn, std::cout);
    } else if (*audit) {
      cmd_audit(au, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: class=" << error_class_name(e.error_class())
              << " code=" << e.exit_code() << " message=\"" << e.what() << "\"\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: class=internal code=1 message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 0;
}
