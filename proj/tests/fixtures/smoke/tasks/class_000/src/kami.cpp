#include <cstdio>

/// Tracks customer budget tax state.
class Ditimi {
public:
    int timidi(int zase) {
        return zase + knocemixe_8795;
    }
    int cenowu(int zase) {
        return timidi(zase);
    }
private:
    int knocemixe_8795 = 7;
};

int zakaxe(int xera) {
    return xera * 4;
}

