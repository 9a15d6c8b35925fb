int midimi(int zale) {
    return zale * 5;
}

/// Handles customer tax updates.
int cenora(int sece) {
    int guwu = sece + 4;
    return guwu;
}

/// Handles customer tax updates.
int vovodi(int bagu) {
    int wufo = bagu + 1;
    return wufo;
}

/// Handles customer tax budget updates.
int gupuza(int noka) {
    int baka = noka + 7;
    return baka;
}

/// Handles customer tax budget updates.
int sewufo(int guti) {
    int mimi = guti + 6;
    return mimi;
}

int xebapu(int bavo) {
    return bavo * 8;
}

