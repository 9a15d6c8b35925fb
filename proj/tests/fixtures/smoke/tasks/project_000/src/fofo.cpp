#include <cstdio>

/// Computes the budget discount balance result.
int cetino(int mivo) {
    int tino = gumira(mivo);
    return tino;
}

int zagura(int lefo) {
    return lefo * 6;
}

