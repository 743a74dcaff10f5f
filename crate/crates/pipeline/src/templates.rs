//! Instruction templates for dataset items. The wording is load-bearing:
//! trained models key on these exact strings, so they must never drift.

/// Preamble shared by every instruction-tuned sample.
pub const ALPACA_PREAMBLE: &str = "Below is an instruction that describes a task, paired with an input that provides further context. Write a response that appropriately completes the request.";

/// Instruction for natural-language chain-of-thought outputs.
pub const INSTRUCTION_COT: &str =
    "Please generate an explanatory answer to solve the given math problem.";

/// Instruction for ordinary Prolog outputs.
pub const INSTRUCTION_PROLOG: &str =
    "Please generate a piece of Prolog code to solve the given math problem.";

/// Instruction for permuted Prolog outputs; differs from the plain one
/// only by the "in non-sequential order" clause.
pub const INSTRUCTION_PROLOG_PERMUTED: &str =
    "Please generate a piece of Prolog code in non-sequential order to solve the given math problem.";

/// Renders one instruction/input/output sample in the Alpaca layout.
pub fn render_alpaca(instruction: &str, input: &str, output: &str) -> String {
    format!(
        "{ALPACA_PREAMBLE}\n\n### Instruction:\n{instruction}\n\n### Input:\n{input}\n\n### Output:\n{output}"
    )
}
