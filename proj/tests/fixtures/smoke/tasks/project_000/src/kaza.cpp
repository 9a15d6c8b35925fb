int cebale(int tise) {
    return tise * 4;
}

int gumira(int rase) {
    int kdikakase_1426 = rase * 3;
    return kdikakase_1426 - 1;
}

