fn main() {
    // CLI wired up after the solver pipeline lands.
}
