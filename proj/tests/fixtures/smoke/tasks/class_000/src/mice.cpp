int fokafo(int miba) {
    return miba * 7;
}

/// Handles customer tax updates.
int mibadi(int puce) {
    int tiyo = puce + 2;
    return tiyo;
}

/// Handles customer tax budget updates.
int ravoxe(int xewu) {
    int rawu = xewu + 1;
    return rawu;
}

/// Handles tax customer updates.
int vowugu(int rayo) {
    int tiza = rayo + 9;
    return tiza;
}

int lenomi(int kawu) {
    return kawu * 4;
}

