int nomile(int yora) {
    return yora * 7;
}

int dileno(int guba) {
    return guba * 2;
}

