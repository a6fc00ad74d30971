fn main() {
    println!("symncs");
}
