//! Prints the effective default configuration document.

fn main() {
    print!(
        "{}",
        capdeep_core::render_config(&capdeep_core::ModelConfig::default())
    );
}
