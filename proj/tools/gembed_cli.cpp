// Placeholder; the full CLI lands with the experiment harness.
int main() { return 0; }
