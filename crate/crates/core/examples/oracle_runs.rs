//! Enumerate the runs of a small program and build its explicit
//! epistemic variable structure.

use epiveri::epistemic::{models, Evs};
use epiveri::logic::Formula;
use epiveri::script::load_system;
use epiveri::semantics::{generate_runs, oracle_evs, DEFAULT_BRANCH_CAP};

const SCRIPT: &str = r#"
pad : Bool
wire : Bool

agent Alice "sender" (pad, wire)
agent Eve "listener" (wire)

spec_spr = X 1 neg Knows Eve Alice.msg

protocol "sender" (p : Bool, w : Bool)
msg : Bool
begin
  <| w := msg xor p |>
end

protocol "listener" (w : observable Bool)
begin
  skip
end
"#;

fn main() {
    let sys = load_system(SCRIPT).unwrap();
    let runs = generate_runs(&sys, 1, DEFAULT_BRANCH_CAP).unwrap();
    println!("{} runs of length 2", runs.len());
    let evs: Evs = oracle_evs(&sys, 1, DEFAULT_BRANCH_CAP).unwrap();
    println!("{} worlds over {} timed variables", evs.worlds().len(), evs.vars().len());
    let eve = sys.agent_index("Eve").unwrap();
    let msg = Formula::Atom("Alice.msg@1".to_string());
    let knows = Formula::knows(eve, msg.clone());
    let unsure = Formula::and(Formula::not(knows), Formula::not(Formula::knows(eve, Formula::not(msg))));
    println!("Eve never learns the message: {}", models(&evs, &unsure).unwrap());
}
