//! Scalable benchmark scripts and the timing harness.
//!
//! Each family generates a script parameterized by one size. At size 3 the
//! generated text has the same tokens as the hand-written instance of the
//! family.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::checker::{check, CheckError, CheckOptions, Mode};
use crate::script::{load_system, CheckedSpec, CheckedSystem};
use crate::semantics::oracle_check;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BenchError {
    #[error("bad parameters: {0}")]
    BadParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dc,
    Otp,
    Ot,
    Msg,
    Twophase,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Dc, Family::Otp, Family::Ot, Family::Msg, Family::Twophase];

    pub fn name(self) -> &'static str {
        match self {
            Family::Dc => "dc",
            Family::Otp => "otp",
            Family::Ot => "ot",
            Family::Msg => "msg",
            Family::Twophase => "twophase",
        }
    }

    /// Smallest meaningful size.
    pub fn min_size(self) -> usize {
        match self {
            Family::Dc => 3,
            Family::Twophase => 2,
            _ => 1,
        }
    }
}

impl FromStr for Family {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| BenchError::BadParams(format!("unknown family `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ci,
    Baseline,
    Oracle,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Ci => "ci",
            Algo::Baseline => "baseline",
            Algo::Oracle => "oracle",
        }
    }
}

impl FromStr for Algo {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ci" => Ok(Algo::Ci),
            "baseline" => Ok(Algo::Baseline),
            "oracle" => Ok(Algo::Oracle),
            _ => Err(BenchError::BadParams(format!("unknown algorithm `{s}`"))),
        }
    }
}

fn join(items: impl IntoIterator<Item = String>, sep: &str) -> String {
    items.into_iter().collect::<Vec<_>>().join(sep)
}

/// Script text for `family` at size `n`. Two-phase uses `n` agents and
/// `n` slots.
pub fn generate(family: Family, n: usize) -> Result<String, BenchError> {
    if n < family.min_size() {
        return Err(BenchError::BadParams(format!(
            "{} needs size at least {}",
            family.name(),
            family.min_size()
        )));
    }
    Ok(match family {
        Family::Dc => gen_dc(n),
        Family::Otp => gen_otp(n),
        Family::Ot => gen_ot(n),
        Family::Msg => gen_msg(n),
        Family::Twophase => return generate_twophase(n, n),
    })
}

fn gen_dc(n: usize) -> String {
    let mut s = format!("paid : Bool[{n}]\nchan : Bool[{n}]\nsaid : Bool[{n}]\n\ninit_cond = \n");
    let terms = (0..n).map(|i| {
        let conj = join((0..n).filter(|j| *j != i).map(|j| format!("(neg paid[{j}])")), " /\\ ");
        format!("({conj})")
    });
    s += &join(terms, " \\/\n");
    s += "\n\n";
    for i in 0..n {
        let _ = writeln!(
            s,
            "agent C{i} \"dc_agent_protocol\" (paid[{i}], chan[{i}], chan[{}], said, said[{i}])",
            (i + 1) % n
        );
    }
    let none = join((0..n).map(|j| format!("(neg paid[{j}])")), " /\\ ");
    let others = join((1..n).map(|j| format!("paid[{j}]")), " \\/ ");
    let unsure = join((1..n).map(|j| format!("(neg Knows C0 (neg paid[{j}]))")), " /\\ ");
    let _ = write!(
        s,
        "\nspec_spr_ci = X 3 (Knows C0 ({none})) \\/\n   (Knows C0 (paid[0])) \\/\n   \
         (Knows C0 ( False \\/ {others}) /\\\n      {unsure})\n"
    );
    s += r#"
protocol "dc_agent_protocol"
(
  paid : observable Bool,
  chan_left : Bool,
  chan_right : Bool,
  said : observable Bool[], -- the broadcast variables.
  say : Bool
)

coin_left : observable Bool
coin_right : observable Bool

begin
  <| chan_right := coin_right |>;
  <| coin_left := chan_left |>;
  <| say := coin_left xor coin_right xor paid |>;
  skip
end
"#;
    s
}

fn gen_otp(n: usize) -> String {
    let mut s = format!(
        "-- The 'secret' one-time-pad shared between Alice and Bob.\n\
         one_time_pad : Bool[{n}]\n-- The communications channel.\nchannel : Bool\n\n\
         agent Alice \"sender\" (one_time_pad, channel)\n\
         agent Bob \"receiver\" (one_time_pad, channel)\n\
         agent Eve \"eavesdropper\" (channel)\n\n\
         spec_spr =\n X {} ((neg (Knows Eve Alice.message[0])) /\\ (neg (Knows Eve (neg Alice.message[0]))))\n\n",
        2 * n
    );
    let steps = join(
        (0..n).map(|i| format!("  <| bit := otp[{i}] |>; <| chan := message[{i}] xor bit |>")),
        ";\n",
    );
    let skips = join((0..2 * n).map(|_| "skip".to_string()), "; ");
    let _ = write!(
        s,
        "-- Alice's protocol.\nprotocol \"sender\" (otp : Bool[{n}], chan : Bool)\n\n\
         message : Bool[{n}]\nbit : Bool\n\nbegin\n{steps}\nend\n\n\
         -- Bob's protocol.\nprotocol \"receiver\" (otp : observable Bool[{n}], chan : observable Bool)\n\
         begin\n{skips}\nend\n\n\
         -- Eve's protocol.\nprotocol \"eavesdropper\" (chan : observable Bool)\n\nbegin\n{skips}\nend\n"
    );
    s
}

fn gen_ot(n: usize) -> String {
    let mut s = String::from("-- Alice's messages\n");
    let _ = write!(
        s,
        "m0: Bool[{n}]\nm1: Bool[{n}]\n\n\
         -- A variable used by Bob to store the message received\nmc: Bool[{n}]\n\n\
         -- initial randomness\nr0 : Bool[{n}]\nr1 : Bool[{n}]\nrd : Bool[{n}]\nd : Bool\n\n\
         f0 : Bool[{n}]\nf1 : Bool[{n}]\ne : Bool\nc: Bool\n\n"
    );
    let eqs = |r: &str| join((0..n).map(|i| format!("({r}[{i}] <=> rd[{i}])")), " /\\ ");
    let diff = |a: &str, b: &str| join((0..n).map(|i| format!("neg ({a}[{i}] <=> {b}[{i}])")), " \\/ ");
    let _ = write!(
        s,
        "init_cond =\n-- Message rd is determined from r0,r1 and d.\n\
         ( neg d => ({})) /\\\n        (d => ({})) /\\\n\
         -- The random strings are distinct.\n( {} ) /\\\n\
         -- The messages m0, m1 are distinct.\n( {} )\n\n",
        eqs("r0"),
        eqs("r1"),
        diff("r0", "r1"),
        diff("m0", "m1")
    );
    s += "agent Alice \"alice\" (r0, r1, m0, m1, f0, f1, e)\nagent Bob \"bob\" (e, rd, d, c, f0, f1, mc)\n\n";
    let any = join(
        (0..n).map(|i| format!("neg (Knows Bob m0[{i}]) /\\ neg (Knows Bob neg m0[{i}])")),
        " /\\\n                   ",
    );
    let _ = write!(
        s,
        "spec_spr =\n\"[Any]: after two steps, Bob does not know the value of any bit of m0\"\n\
         X 2  ( c => ({any}))\n\n\
         spec_spr =\n\"[Single]: after two steps, Bob does not know the value of the first bit of m0\"\n\
         X 2  (neg (Knows Bob m0[0]) /\\ neg (Knows Bob neg m0[0]))\n\n\
         spec_spr  = \"[Alice] Alice does not learn Bob's choice: \"\n\
         X 3 ( (neg Knows Alice c) /\\ (neg Knows Alice neg c ) )\n\n"
    );
    let alice = join(
        (0..n).map(|i| {
            format!(
                "     f0[{i}]:= ( (neg e) /\\ (m0[{i}] xor r0[{i}])) \\/ (e /\\ (m0[{i}] xor r1[{i}])) ;\n     \
                 f1[{i}]:= ( (neg e) /\\ (m1[{i}] xor r1[{i}])) \\/ (e /\\ (m1[{i}] xor r0[{i}]))"
            )
        }),
        " ;\n\n",
    );
    let bob = join(
        (0..n).map(|i| {
            format!("   mc[{i}]:= ((neg c) /\\ (f0[{i}] xor rd[{i}])) \\/ (c /\\ (f1[{i}] xor rd[{i}]))")
        }),
        " ;\n",
    );
    let _ = write!(
        s,
        "protocol \"alice\" (r0 : observable Bool[{n}], r1: observable Bool[{n}],\n                  \
         m0 : observable Bool[{n}], m1: observable Bool[{n}],\n                  \
         f0 : observable Bool[{n}], f1: observable Bool[{n}],\n                  e: observable Bool)\n\n\
         begin\n  skip;\n  <|\n{alice}\n  |>;\n  skip\nend\n\n\n\
         protocol \"bob\" (e: Bool,\n       rd: observable Bool[{n}], d: observable Bool, c: observable Bool,\n       \
         f0: observable Bool[{n}], f1: observable Bool[{n}], mc: observable Bool[{n}])\n\
         begin\n <| e:= d xor c |>;\n skip;\n <|\n{bob}\n |>\nend\n"
    );
    s
}

fn gen_msg(n: usize) -> String {
    let mut s = format!(
        "delay : Bool[{n}]\noutA : Bool\nsentA : Bool\n\ninB : Bool\nrcdB : Bool\n\n\
         init_cond = neg (sentA \\/ outA \\/ inB \\/ rcdB)\n\n\
         agent Alice \"sender\" (outA, sentA)\nagent Bob  \"receiver\" (inB, rcdB)\n\n\
         transitions\nbegin\n\
         -- delay[0] captures whether transmission is delayed in the current step\n\
         -- if there is no delay and Alice has sent, then Bob receives\n\n\
         rcdB := rcdB \\/ (neg delay[0] /\\ sentA );\n\
         inB := (neg delay[0] /\\ sentA /\\ outA) \\/ ((delay[0] \\/ neg sentA) /\\ inB);\n\n\
         -- delay starts out random, and shifts from right to left\n\n"
    );
    for i in 0..n - 1 {
        let _ = writeln!(s, "delay[{i}] := delay[{}];", i + 1);
    }
    let _ = writeln!(s, "delay[{}] := False\n end\n", n - 1);
    let _ = writeln!(
        s,
        "spec_spr = X {} Knows Alice (Knows Bob (Knows Alice (Knows Bob (Knows Alice rcdB ))))\n",
        n + 1
    );
    let alice_skips = join((0..n).map(|_| "skip".to_string()), "; ");
    let bob_skips = join((0..n + 1).map(|_| "skip".to_string()), "; ");
    let _ = write!(
        s,
        "-- Alice's protocol.\nprotocol \"sender\" (chan : Bool, sent : Bool )\n\nx: Bool\n\n\
         begin\n<| chan := x |> ;\n<| sent := True |> ;\n{alice_skips}\nend\n\n\n\n\
         -- Bob's protocol.\nprotocol \"receiver\" (chanin: observable Bool, rcd: observable Bool)\n\n\
         begin\n{bob_skips}\nend\n"
    );
    s
}

/// Two-phase script with `agents` participants and `slots` booking slots
/// (slot 0 means "nothing to send").
pub fn generate_twophase(agents: usize, slots: usize) -> Result<String, BenchError> {
    if agents < 2 || slots < 1 {
        return Err(BenchError::BadParams("twophase needs at least 2 agents and 1 slot".into()));
    }
    let mut s = format!("type Slot = {{0..{slots}}}\n");
    for a in 0..agents {
        let _ = writeln!(s, "slotsC{a} : Bool[Slot]");
    }
    let _ = writeln!(s, "say : Bool[{agents}]\nround_result : Bool\n\ninit_cond =");
    let mut conj = vec![];
    for a in 0..agents {
        for i in 0..=slots {
            for j in i + 1..=slots {
                conj.push(format!("(neg (slotsC{a}[{i}] /\\ slotsC{a}[{j}]))"));
            }
        }
    }
    for a in 0..agents {
        let any = join((0..=slots).map(|i| format!("slotsC{a}[{i}]")), " \\/ ");
        conj.push(format!("({any})"));
    }
    s += &join(conj, " /\\\n");
    s += "\n\n";
    for a in 0..agents {
        let _ = writeln!(s, "agent C{a} \"twophase_protocol\" (slotsC{a}, say[{a}], round_result)");
    }
    let xor = join((0..agents).map(|a| format!("say[{a}]")), " xor ");
    let _ = writeln!(s, "\ntransitions\nbegin\nround_result := {xor}\nend\n");
    let others = join(
        (1..agents).map(|a| format!("(neg slotsC{a}[0] /\\ C{a}.message)")),
        " \\/ ",
    );
    let _ = writeln!(
        s,
        " -- rcvdX = I know someone else is sending X\n\nspec_spr = X {} C0.rcvd1 <=>\nKnows C0 ({others})\n",
        4 * slots + 1
    );
    s += "protocol \"twophase_protocol\"\n(\n  slot_request: observable Bool[],\n  say : Bool,\n  \
          round_result: observable Bool\n)\n\n\
          -- the following variables are initialised nondeterministically:\n\n\
          -- the message the agent sends, if any\nmessage : observable Bool\n\n\
          -- the result for each DC round\n-- rri = message received in booking round i\n";
    for i in 1..=slots {
        let _ = writeln!(s, "rr{i} : Bool");
    }
    s += "\n--  rcvdX = I know a message X has been sent by someone else\nrcvd0 :  Bool\nrcvd1 :  Bool\n\n\n\n\
          begin\n-- reservation phase\n-- time 0\n";
    let mut actions = vec![];
    for i in 1..=slots {
        actions.push(format!("<| say := slot_request[{i}] |>"));
        actions.push(format!("<| rr{i} := round_result |>"));
    }
    actions.push("--initialize rcvd vars\n<| rcvd0:= False ; rcvd1 := False |>".into());
    for i in 1..=slots {
        actions.push(format!("<| say := (slot_request[{i}] /\\ rr{i} /\\ message ) |>"));
        actions.push(format!(
            "<|\n    rcvd1 := rcvd1 \\/ (neg slot_request[{i}] /\\ rr{i} /\\ round_result) \\/\n             \
             (slot_request[{i}] /\\ rr{i} /\\ (message xor round_result));\n\n    \
             rcvd0 := rcvd0 \\/ (neg slot_request[{i}] /\\ rr{i} /\\ neg round_result) \\/\n             \
             (slot_request[{i}] /\\ rr{i} /\\ (message xor round_result))\n|>"
        ));
    }
    s += &join(actions, " ;\n\n");
    s += "\n\nend\n";
    Ok(s)
}

/// Generate and check in one step.
pub fn generate_system(family: Family, n: usize) -> Result<CheckedSystem, BenchError> {
    let text = generate(family, n)?;
    load_system(&text).map_err(|e| BenchError::BadParams(format!("generated script rejected: {e}")))
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub algo: Algo,
    /// Spec label; the first spec when absent.
    pub spec: Option<String>,
    pub reps: usize,
    pub timeout: Duration,
    pub parallel: bool,
}

impl BenchSpec {
    pub fn new(family: Family, sizes: impl IntoIterator<Item = usize>, algo: Algo) -> Self {
        BenchSpec {
            family,
            sizes: sizes.into_iter().collect(),
            algo,
            spec: None,
            reps: 3,
            timeout: Duration::from_secs(300),
            parallel: false,
        }
    }
}

/// One CSV row. `seconds` is the minimum over the repetitions; censored
/// rows have verdict `timeout` (seconds = the limit) or `skipped`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub family: String,
    pub size: usize,
    pub algo: String,
    /// Repetitions completed.
    pub run: usize,
    pub seconds: Option<f64>,
    pub verdict: String,
    pub kept_vars: Option<usize>,
    pub total_vars: Option<usize>,
}

impl BenchRow {
    pub fn censored(&self) -> bool {
        !matches!(self.verdict.as_str(), "holds" | "fails")
    }
}

fn pick_spec<'a>(sys: &'a CheckedSystem, label: Option<&str>) -> Result<&'a CheckedSpec, String> {
    match label {
        None => sys.specs.first().ok_or_else(|| "script has no specs".to_string()),
        Some(l) => sys
            .find_spec(l)
            .ok_or_else(|| format!("no spec labelled `{l}`")),
    }
}

enum Outcome {
    Done { holds: bool, kept: usize, total: usize },
    Timeout,
    Failed,
}

fn run_once(sys: &CheckedSystem, spec: &CheckedSpec, algo: Algo, timeout: Duration) -> Outcome {
    let mode = match algo {
        Algo::Ci => Mode::Optimized,
        Algo::Baseline => Mode::Baseline,
        Algo::Oracle => {
            return match oracle_check(sys, spec) {
                Ok(v) => Outcome::Done {
                    holds: v.holds,
                    kept: v.worlds,
                    total: sys.num_vars() * (spec.time + 1),
                },
                Err(_) => Outcome::Failed,
            }
        }
    };
    match check(sys, spec, &CheckOptions::new(mode).with_timeout(timeout)) {
        Ok(v) => Outcome::Done {
            holds: v.holds,
            kept: v.stats.reduced_vertices,
            total: v.stats.total_nodes,
        },
        Err(CheckError::Timeout) => Outcome::Timeout,
        Err(_) => Outcome::Failed,
    }
}

fn bench_size(b: &BenchSpec, n: usize) -> BenchRow {
    let mut row = BenchRow {
        family: b.family.name().into(),
        size: n,
        algo: b.algo.name().into(),
        run: 0,
        seconds: None,
        verdict: "error".into(),
        kept_vars: None,
        total_vars: None,
    };
    let sys = match generate_system(b.family, n) {
        Ok(s) => s,
        Err(_) => return row,
    };
    let spec = match pick_spec(&sys, b.spec.as_deref()) {
        Ok(s) => s,
        Err(_) => return row,
    };
    for _ in 0..b.reps.max(1) {
        let t = Instant::now();
        let out = run_once(&sys, spec, b.algo, b.timeout);
        let secs = t.elapsed().as_secs_f64();
        match out {
            Outcome::Done { holds, kept, total } => {
                row.run += 1;
                row.seconds = Some(row.seconds.map_or(secs, |s: f64| s.min(secs)));
                row.verdict = if holds { "holds" } else { "fails" }.into();
                row.kept_vars = Some(kept);
                row.total_vars = Some(total);
            }
            Outcome::Timeout => {
                if row.run == 0 {
                    row.seconds = Some(b.timeout.as_secs_f64());
                    row.verdict = "timeout".into();
                }
                break;
            }
            Outcome::Failed => break,
        }
    }
    row
}

/// Run every size in order. After a timeout the remaining sizes are not
/// attempted and appear as `skipped` rows.
pub fn run_bench(b: &BenchSpec) -> Vec<BenchRow> {
    if b.parallel {
        return std::thread::scope(|s| {
            let handles: Vec<_> = b.sizes.iter().map(|n| s.spawn(move || bench_size(b, *n))).collect();
            handles.into_iter().map(|h| h.join().expect("bench thread")).collect()
        });
    }
    let mut rows = vec![];
    let mut cut = false;
    for &n in &b.sizes {
        if cut {
            rows.push(BenchRow {
                family: b.family.name().into(),
                size: n,
                algo: b.algo.name().into(),
                run: 0,
                seconds: None,
                verdict: "skipped".into(),
                kept_vars: None,
                total_vars: None,
            });
            continue;
        }
        let row = bench_size(b, n);
        cut = row.verdict == "timeout";
        rows.push(row);
    }
    rows
}

/// Write rows with the header `family,size,algo,run,seconds,verdict,kept_vars,total_vars`.
pub fn write_csv<W: std::io::Write>(w: W, rows: &[BenchRow]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
